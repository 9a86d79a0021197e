//! Multi-start enumeration of every stationary solution at one solar
//! constant: grid-seeded Newton over all admissible cases, root
//! deduplication and the ice-pattern validity filter.

use rayon::prelude::*;

use crate::bim::case::{cases_for, CaseSpec, RightEnd, MIN_SEP};
use crate::bim::newton::{newton_find, NewtonOpts, NewtonOutcome};
use crate::bim::system::{Assembled, BieSystem, StationarySolution};
use crate::error::Result;
use crate::greenfn::GreenKernel;
use crate::params::{nondimensionalize, ContinentConfig, DimensionlessParams, PhysicalParams};

#[derive(Debug, Clone)]
pub struct EnumerateOpts {
    /// Seeds per unknown critical latitude (>= 8 for exhaustive searches).
    pub seed_density: usize,
    pub newton: NewtonOpts,
    pub quad_tol: f64,
    /// Number of uniform profile samples.
    pub profile_points: usize,
    /// Roots closer than this (max over components) are duplicates.
    pub dedup_tol: f64,
    /// Allowed threshold violation when checking a profile against its
    /// claimed ice pattern.
    pub validity_tol: f64,
}

impl Default for EnumerateOpts {
    fn default() -> Self {
        Self {
            seed_density: 8,
            newton: NewtonOpts::default(),
            quad_tol: 1e-10,
            profile_points: 401,
            dedup_tol: 1e-4,
            validity_tol: 1e-6,
        }
    }
}

/// Extra Newton starts for specific cases (warm starts from a neighbouring
/// solar constant during sweeps).
pub type WarmSeeds = Vec<(String, Vec<f64>)>;

/// Ordered tuples of seed positions for a case: each critical latitude gets
/// a uniform grid over its bracket, and latitudes sharing a bracket are
/// kept strictly ascending.
fn seed_grid(case: &CaseSpec, config: &ContinentConfig, density: usize) -> Vec<Vec<f64>> {
    let k = case.crit_count();
    if k == 0 {
        return vec![vec![]];
    }
    let per_crit: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            let (lo, hi) = case.crit_bracket(i, config);
            (1..=density)
                .map(|j| lo + (hi - lo) * j as f64 / (density + 1) as f64)
                .collect()
        })
        .collect();
    let mut seeds: Vec<Vec<f64>> = vec![vec![]];
    for grid in &per_crit {
        let mut next = Vec::with_capacity(seeds.len() * grid.len());
        for seed in &seeds {
            for &g in grid {
                if seed.last().is_none_or(|&prev| g > prev + MIN_SEP) {
                    let mut s = seed.clone();
                    s.push(g);
                    next.push(s);
                }
            }
        }
        seeds = next;
    }
    seeds
}

/// Does the sampled profile respect the ice pattern it was solved under?
/// Warm regions must stay above the local threshold, icy regions below,
/// away from the landmarks where the profile touches it.
fn pattern_valid(assembled: &Assembled<'_, '_>, solution_profile: &[(f64, f64)], tol: f64) -> bool {
    let sys = assembled.sys;
    let dp = sys.dp;
    let pi = std::f64::consts::PI;
    let mirror = sys.case.right_end == RightEnd::SymmetryPlane;
    let regions = match sys.case.regions(sys.config, &assembled.theta_c) {
        Ok(r) => r,
        Err(_) => return false,
    };
    for (theta, t) in solution_profile {
        let th = if mirror && *theta > pi / 2.0 {
            pi - *theta
        } else {
            *theta
        };
        for region in &regions {
            // Skip the immediate neighbourhood of the region boundaries:
            // the profile legitimately touches the threshold there.
            if th <= region.lo + 1e-9 || th >= region.hi - 1e-9 {
                continue;
            }
            let thr = dp.threshold(region.source.surface);
            let ok = if region.source.ice {
                *t <= thr + tol
            } else {
                *t >= thr - tol
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

fn to_solution(
    assembled: &Assembled<'_, '_>,
    case: &CaseSpec,
    q: f64,
    opts: &EnumerateOpts,
) -> Result<Option<StationarySolution>> {
    let profile = assembled.sample_profile(opts.profile_points)?;
    if !pattern_valid(assembled, &profile, opts.validity_tol) {
        return Ok(None);
    }
    let t_mean = assembled.mean_dimensionless()?;
    Ok(Some(StationarySolution {
        case_name: case.name.clone(),
        q,
        theta_c: assembled.full_theta_c(),
        theta_c_reduced: assembled.theta_c.clone(),
        unknowns: assembled.boundary_unknowns(),
        profile,
        residual_norm: assembled.residual_norm_inf(),
        half_domain: case.right_end == RightEnd::SymmetryPlane,
        t_mean,
    }))
}

fn solve_case(
    case: &CaseSpec,
    config: &ContinentConfig,
    p: &PhysicalParams,
    dp: &DimensionlessParams,
    q: f64,
    kernel: &GreenKernel,
    opts: &EnumerateOpts,
    extra_seeds: &[Vec<f64>],
) -> Result<Vec<StationarySolution>> {
    let sys = BieSystem {
        case,
        config,
        p,
        dp,
        kernel,
        quad_tol: opts.quad_tol,
    };
    let mut seeds = seed_grid(case, config, opts.seed_density);
    seeds.extend(extra_seeds.iter().cloned());

    let mut roots: Vec<Vec<f64>> = Vec::new();
    let mut solutions = Vec::new();
    for seed in &seeds {
        let outcome = match newton_find(&sys, seed, &opts.newton) {
            Ok(o) => o,
            Err(_) => continue,
        };
        let assembled = match outcome {
            NewtonOutcome::Converged(a) => a,
            NewtonOutcome::Failed(_) => continue,
        };
        let is_dup = roots.iter().any(|r| {
            r.iter()
                .zip(&assembled.theta_c)
                .all(|(a, b)| (a - b).abs() < opts.dedup_tol)
        });
        if is_dup {
            continue;
        }
        roots.push(assembled.theta_c.clone());
        if let Some(sol) = to_solution(&assembled, case, q, opts)? {
            solutions.push(sol);
        }
    }
    Ok(solutions)
}

/// Find every stationary solution at solar constant `q`.
///
/// Runs grid-seeded Newton over all cases of the geometry (the k = 0 cases
/// reduce to a single linear solve), deduplicates roots and keeps the
/// solutions whose profile is sign-consistent with the claimed ice pattern.
/// Case work items run in parallel; the returned order is deterministic
/// (case name, then critical latitudes lexicographically).
pub fn enumerate_equilibria(
    p: &PhysicalParams,
    config: &ContinentConfig,
    q: f64,
    kernel: &GreenKernel,
    opts: &EnumerateOpts,
    warm_seeds: &WarmSeeds,
) -> Result<Vec<StationarySolution>> {
    let dp = nondimensionalize(p, q)?;
    let cases = cases_for(config);
    let mut per_case: Vec<Vec<StationarySolution>> = cases
        .par_iter()
        .map(|case| {
            let extra: Vec<Vec<f64>> = warm_seeds
                .iter()
                .filter(|(name, _)| name == &case.name)
                .map(|(_, s)| s.clone())
                .collect();
            solve_case(case, config, p, &dp, q, kernel, opts, &extra)
                .unwrap_or_default()
        })
        .collect();
    let mut all: Vec<StationarySolution> = per_case.drain(..).flatten().collect();
    all.sort_by(|a, b| {
        a.case_name
            .cmp(&b.case_name)
            .then_with(|| {
                a.theta_c
                    .partial_cmp(&b.theta_c)
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    Ok(all)
}
