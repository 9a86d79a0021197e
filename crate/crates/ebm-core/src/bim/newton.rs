//! Newton iteration on the critical-latitude residual.
//!
//! The Jacobian is formed by central differences of the residual; a
//! perturbed critical latitude only touches its two adjacent regions, so the
//! other region quadratures are reused.

use nalgebra::{DMatrix, DVector};

use crate::bim::system::{Assembled, BieSystem};
use crate::error::{EbmError, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOpts {
    pub tol: f64,
    pub max_iter: usize,
    pub fd_step: f64,
}

impl Default for NewtonOpts {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50,
            fd_step: 1e-6,
        }
    }
}

/// Central-difference Jacobian of the residual at `base`.
pub fn jacobian<'s, 'a>(
    sys: &'s BieSystem<'a>,
    base: &Assembled<'s, 'a>,
    step: f64,
) -> Result<DMatrix<f64>> {
    let k = base.theta_c.len();
    let mut jac = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let mut plus = base.theta_c.clone();
        plus[i] += step;
        let mut minus = base.theta_c.clone();
        minus[i] -= step;
        let fp = sys.assemble_perturbed(base, &plus, i)?;
        let fm = sys.assemble_perturbed(base, &minus, i)?;
        for r in 0..k {
            jac[(r, i)] = (fp.residual[r] - fm.residual[r]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// Result of a Newton search: either a converged assembly or a reason the
/// start failed (not an error; multi-start expects failures).
pub enum NewtonOutcome<'s, 'a> {
    Converged(Assembled<'s, 'a>),
    Failed(&'static str),
}

pub fn newton_find<'s, 'a>(
    sys: &'s BieSystem<'a>,
    guess: &[f64],
    opts: &NewtonOpts,
) -> Result<NewtonOutcome<'s, 'a>> {
    if !sys.case.feasible(sys.config, guess) {
        return Ok(NewtonOutcome::Failed("infeasible guess"));
    }
    // Linear case: a single assembly is the solution.
    if guess.is_empty() {
        return Ok(NewtonOutcome::Converged(sys.assemble(guess)?));
    }

    let mut current = match sys.assemble(guess) {
        Ok(a) => a,
        Err(EbmError::DegenerateCase { .. }) => {
            return Ok(NewtonOutcome::Failed("degenerate at guess"))
        }
        Err(e) => return Err(e),
    };
    let mut norm = current.residual_norm_inf();
    let mut stall = 0usize;

    for _ in 0..opts.max_iter {
        if norm < opts.tol {
            return Ok(NewtonOutcome::Converged(current));
        }
        let jac = match jacobian(sys, &current, opts.fd_step) {
            Ok(j) => j,
            Err(EbmError::InfeasibleConfiguration(_)) => {
                return Ok(NewtonOutcome::Failed("jacobian stencil infeasible"))
            }
            Err(EbmError::DegenerateCase { .. }) => {
                return Ok(NewtonOutcome::Failed("degenerate jacobian point"))
            }
            Err(e) => return Err(e),
        };
        let f = DVector::from_column_slice(&current.residual);
        let delta = match jac.lu().solve(&(-f)) {
            Some(d) => d,
            None => return Ok(NewtonOutcome::Failed("singular jacobian")),
        };

        // Backtrack into the feasible set and (loosely) downhill.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..12 {
            let candidate: Vec<f64> = current
                .theta_c
                .iter()
                .zip(delta.iter())
                .map(|(x, d)| x + t * d)
                .collect();
            if sys.case.feasible(sys.config, &candidate) {
                match sys.assemble(&candidate) {
                    Ok(a) => {
                        accepted = Some(a);
                        break;
                    }
                    Err(EbmError::DegenerateCase { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            t *= 0.5;
        }
        let next = match accepted {
            Some(a) => a,
            None => return Ok(NewtonOutcome::Failed("step left feasible set")),
        };
        let next_norm = next.residual_norm_inf();
        if next_norm > 0.5 * norm {
            stall += 1;
            if stall >= 6 {
                return Ok(NewtonOutcome::Failed("stalled"));
            }
        } else {
            stall = 0;
        }
        current = next;
        norm = next_norm;
    }
    if norm < opts.tol {
        Ok(NewtonOutcome::Converged(current))
    } else {
        Ok(NewtonOutcome::Failed("max iterations"))
    }
}
