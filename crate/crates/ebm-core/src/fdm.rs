//! Method-of-lines finite-difference integrator for the time-dependent
//! energy balance equation, plus the artificial-source verification harness.
//!
//! The polar boundary conditions sin(th) dT/dth -> 0 become the ghost rules
//! `T_0 = T_2`, `T_N = T_{N-2}`; the endpoint ODEs are eliminated (the
//! one-sided stencils carry cot(th) factors that are singular at the poles)
//! and the interior nodes advance with an embedded Dormand-Prince pair.

use std::f64::consts::PI;

use crate::error::{EbmError, Result};
use crate::params::{
    albedo_smooth, insolation, ContinentConfig, DimensionlessParams, PhysicalParams, Surface,
};

/// Uniform angular grid theta_i = i pi / N, i = 0..=N.
#[derive(Debug, Clone)]
pub struct Grid {
    pub n: usize,
    pub h: f64,
    pub theta: Vec<f64>,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 64 {
            return Err(EbmError::InvalidParameter(format!(
                "grid needs N >= 64, got {n}"
            )));
        }
        let h = PI / n as f64;
        Ok(Self {
            n,
            h,
            theta: (0..=n).map(|i| i as f64 * h).collect(),
        })
    }
}

/// Grid, time and temperature vector (length N+1, ghost rules holding).
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub grid: Grid,
    pub t: f64,
    pub temps: Vec<f64>,
}

impl SimulationState {
    pub fn new(grid: Grid, t: f64, mut temps: Vec<f64>) -> Result<Self> {
        if temps.len() != grid.n + 1 {
            return Err(EbmError::InvalidParameter(format!(
                "temperature vector length {} does not match grid size {}",
                temps.len(),
                grid.n + 1
            )));
        }
        apply_ghost_rules(&mut temps);
        Ok(Self { grid, t, temps })
    }

    /// Build a state by sampling a function of theta.
    pub fn from_fn(grid: Grid, t: f64, f: impl Fn(f64) -> f64) -> Self {
        let mut temps: Vec<f64> = grid.theta.iter().map(|&th| f(th)).collect();
        apply_ghost_rules(&mut temps);
        Self { grid, t, temps }
    }
}

/// Enforce T_0 = T_2 and T_N = T_{N-2}.
pub fn apply_ghost_rules(temps: &mut [f64]) {
    let n = temps.len() - 1;
    temps[0] = temps[2];
    temps[n] = temps[n - 2];
}

/// Centered approximation of the diffusion part -1/sin (sin f')' at an
/// interior node (beta is applied separately by the callers).
pub fn stencil_centered(f_m: f64, f_0: f64, f_p: f64, theta: f64, h: f64) -> Result<f64> {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(EbmError::PoleStencil(theta));
    }
    let cot = theta.cos() / s;
    Ok(-(2.0 * (f_m - 2.0 * f_0 + f_p) + (f_p - f_m) * h * cot) / (2.0 * h * h))
}

/// One-sided forward approximation at the leftmost node of the triple
/// (quadratic fit through theta, theta+h, theta+2h).
pub fn stencil_forward(f_0: f64, f_1: f64, f_2: f64, theta: f64, h: f64) -> Result<f64> {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(EbmError::PoleStencil(theta));
    }
    let cot = theta.cos() / s;
    let second = (f_0 - 2.0 * f_1 + f_2) / (h * h);
    let first = -(3.0 * f_0 - 4.0 * f_1 + f_2) / (2.0 * h);
    Ok(-(second + cot * first))
}

/// One-sided backward approximation at the rightmost node of the triple.
pub fn stencil_backward(f_0: f64, f_1: f64, f_2: f64, theta: f64, h: f64) -> Result<f64> {
    let s = theta.sin();
    if s.abs() < 1e-12 {
        return Err(EbmError::PoleStencil(theta));
    }
    let cot = theta.cos() / s;
    let second = (f_0 - 2.0 * f_1 + f_2) / (h * h);
    let first = (f_0 - 4.0 * f_1 + 3.0 * f_2) / (2.0 * h);
    Ok(-(second + cot * first))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlbedoMode {
    Step,
    Smooth,
}

/// The time-dependent problem: standard ice-albedo forcing or a prescribed
/// artificial source replacing it.
pub struct FdmProblem<'a> {
    pub p: &'a PhysicalParams,
    pub dp: DimensionlessParams,
    pub config: ContinentConfig,
    pub albedo: AlbedoMode,
    /// When set, the right-hand side becomes gamma dT/dt = -L T + rho(th, t)
    /// with L including beta (the artificial-source harness).
    pub rho: Option<Box<dyn Fn(f64, f64) -> f64 + Sync + 'a>>,
}

impl<'a> FdmProblem<'a> {
    pub fn new(p: &'a PhysicalParams, dp: DimensionlessParams, config: ContinentConfig) -> Self {
        Self {
            p,
            dp,
            config,
            albedo: AlbedoMode::Smooth,
            rho: None,
        }
    }

    pub fn with_albedo(mut self, albedo: AlbedoMode) -> Self {
        self.albedo = albedo;
        self
    }

    pub fn albedo_of(&self, t: f64, surface: Surface) -> f64 {
        match self.albedo {
            AlbedoMode::Smooth => albedo_smooth(t, surface, self.p, &self.dp),
            AlbedoMode::Step => {
                // Simple evaluation, no event detection; the exact threshold
                // falls to the ice side.
                let thr = self.dp.threshold(surface);
                let (warm, ice) = match surface {
                    Surface::Water => (self.p.a1, self.p.a2),
                    Surface::Land => (self.p.a1_land, self.p.a2_land),
                };
                if t > thr {
                    warm
                } else {
                    ice
                }
            }
        }
    }

    /// Time derivative of the interior nodes i = 1..N-1 given the full
    /// temperature vector (ghost rules already applied).
    ///
    /// The first and last interior node use one-sided second-order stencils
    /// that reference interior nodes only: a centered stencil there would
    /// reach across the pole where the ghost closure is inconsistent
    /// whenever the solution has a nonzero polar derivative (the artificial
    /// sources do).
    fn rhs_interior(&self, grid: &Grid, time: f64, temps: &[f64], out: &mut [f64]) {
        let n = grid.n;
        let h = grid.h;
        let dp = &self.dp;
        for i in 1..n {
            let th = grid.theta[i];
            let cot = th.cos() / th.sin();
            let diff = if i == 1 {
                let d1 = (-3.0 * temps[1] + 4.0 * temps[2] - temps[3]) / (2.0 * h);
                let d2 = (2.0 * temps[1] - 5.0 * temps[2] + 4.0 * temps[3] - temps[4]) / (h * h);
                -(d2 + cot * d1)
            } else if i == n - 1 {
                let d1 = (3.0 * temps[n - 1] - 4.0 * temps[n - 2] + temps[n - 3]) / (2.0 * h);
                let d2 = (2.0 * temps[n - 1] - 5.0 * temps[n - 2] + 4.0 * temps[n - 3]
                    - temps[n - 4])
                    / (h * h);
                -(d2 + cot * d1)
            } else {
                -(2.0 * (temps[i - 1] - 2.0 * temps[i] + temps[i + 1])
                    + (temps[i + 1] - temps[i - 1]) * h * cot)
                    / (2.0 * h * h)
            };
            let surface = self.config.surface_at(th);
            let gamma = dp.gamma(surface);
            let forcing = match &self.rho {
                Some(rho) => rho(th, time),
                None => {
                    let a = self.albedo_of(temps[i], surface);
                    dp.eta * insolation(th, self.p) * (1.0 - a) - dp.alpha
                }
            };
            out[i - 1] = (-diff - dp.beta * temps[i] + forcing) / gamma;
        }
    }
}

/// Time derivative field of a state (interior nodes; endpoints carry no
/// independent ODE and are reported as zero).
pub fn rhs(state: &SimulationState, problem: &FdmProblem<'_>) -> Vec<f64> {
    let n = state.grid.n;
    let mut interior = vec![0.0; n - 1];
    problem.rhs_interior(&state.grid, state.t, &state.temps, &mut interior);
    let mut out = vec![0.0; n + 1];
    out[1..n].copy_from_slice(&interior);
    out
}

pub fn rhs_norm_inf(state: &SimulationState, problem: &FdmProblem<'_>) -> f64 {
    rhs(state, problem).iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct IntegrateOpts {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for IntegrateOpts {
    fn default() -> Self {
        Self {
            rtol: 1e-6,
            atol: 1e-9,
            max_steps: 200_000_000,
        }
    }
}

/// A trajectory: states at the requested sample times (always including
/// t_end as the last entry).
pub struct Trajectory {
    pub samples: Vec<SimulationState>,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &SimulationState {
        self.samples.last().expect("trajectory has at least t_end")
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Advance the state to `t_end`, sampling at `sample_times` (within
/// (t0, t_end); t_end itself is always the last sample); ghost rules are
/// re-applied after every accepted step.
pub fn integrate(
    state0: &SimulationState,
    t_end: f64,
    problem: &FdmProblem<'_>,
    opts: &IntegrateOpts,
    sample_times: &[f64],
) -> Result<Trajectory> {
    let grid = &state0.grid;
    let n = grid.n;
    let dim = n - 1;
    let mut t = state0.t;

    let mut full = state0.temps.clone();
    apply_ghost_rules(&mut full);
    let mut y: Vec<f64> = full[1..n].to_vec();

    let mut targets: Vec<f64> = sample_times
        .iter()
        .copied()
        .filter(|&s| s > t && s < t_end)
        .collect();
    targets.push(t_end);
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup();

    let assemble_full = |y: &[f64]| {
        let mut full = vec![0.0; n + 1];
        full[1..n].copy_from_slice(y);
        apply_ghost_rules(&mut full);
        full
    };

    let eval = |t: f64, y: &[f64], out: &mut [f64]| {
        let full = assemble_full(y);
        problem.rhs_interior(grid, t, &full, out);
    };

    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    let mut ytmp = vec![0.0; dim];
    eval(t, &y, &mut k[0]);

    // Initial step from the derivative scale.
    let d0 = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let d1 = k[0].iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-10);
    let mut hstep = (0.01 * d0 / d1).min((t_end - t).abs().max(1e-12));

    let mut samples = Vec::with_capacity(targets.len());
    let mut steps = 0usize;

    for &target in &targets {
        while t < target {
            if steps >= opts.max_steps {
                return Err(EbmError::Stiffness { t, h: hstep });
            }
            let h = hstep.min(target - t);
            for s in 0..6 {
                for (i, yt) in ytmp.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (j, kj) in k.iter().enumerate().take(s + 1) {
                        acc += A[s][j] * kj[i];
                    }
                    *yt = y[i] + h * acc;
                }
                let (_, tail) = k.split_at_mut(s + 1);
                eval(t + C[s] * h, &ytmp, &mut tail[0]);
            }
            // After the stage loop ytmp holds the 5th-order solution and
            // k[6] its derivative (FSAL).
            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut e = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                e *= h;
                let scale = opts.atol + opts.rtol * y[i].abs().max(ytmp[i].abs());
                err_sq += (e / scale) * (e / scale);
            }
            let err = (err_sq / dim as f64).sqrt();
            steps += 1;
            if err <= 1.0 {
                t += h;
                y.copy_from_slice(&ytmp);
                k.swap(0, 6);
            }
            let factor = if err > 0.0 {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            } else {
                5.0
            };
            hstep = h * factor;
            if hstep < 1e-13 * (1.0 + t.abs()) {
                return Err(EbmError::Stiffness { t, h: hstep });
            }
        }
        let full = assemble_full(&y);
        samples.push(SimulationState {
            grid: grid.clone(),
            t,
            temps: full,
        });
    }

    Ok(Trajectory { samples, steps })
}

/// Which assumed solution drives the artificial source test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtificialSource {
    /// T_e = (3 - sin t) exp(-3 (th - pi/2)^2) - 1.
    GaussPulse,
    /// T_e = 2 exp(-5 (th - (pi/2) cos(0.2 t))^2).
    MovingGauss,
}

impl ArtificialSource {
    /// The assumed exact solution (dimensionless, t in units of t0).
    pub fn exact(&self, theta: f64, t: f64) -> f64 {
        match self {
            ArtificialSource::GaussPulse => {
                (3.0 - t.sin()) * (-3.0 * (theta - PI / 2.0).powi(2)).exp() - 1.0
            }
            ArtificialSource::MovingGauss => {
                let m = PI / 2.0 * (0.2 * t).cos();
                2.0 * (-5.0 * (theta - m).powi(2)).exp()
            }
        }
    }

    /// Hand-differentiated source rho = gamma dT_e/dt + L T_e (with L
    /// containing beta). For T_e = A(t) exp(-c (th - m(t))^2) + d:
    ///
    /// ```text
    /// dT/dt    = [A' + 2 c A (th - m) m'] E
    /// dT/dth   = -2 c A (th - m) E
    /// d2T/dth2 = A E (4 c^2 (th - m)^2 - 2 c)
    /// L T      = -(d2T/dth2 + cot(th) dT/dth) + beta T
    /// ```
    pub fn rho(&self, theta: f64, t: f64, beta: f64, gamma: f64) -> f64 {
        let (a, da, c, m, dm, d) = match self {
            ArtificialSource::GaussPulse => (3.0 - t.sin(), -t.cos(), 3.0, PI / 2.0, 0.0, -1.0),
            ArtificialSource::MovingGauss => {
                let m = PI / 2.0 * (0.2 * t).cos();
                let dm = -PI / 2.0 * 0.2 * (0.2 * t).sin();
                (2.0, 0.0, 5.0, m, dm, 0.0)
            }
        };
        let x = theta - m;
        let e = (-c * x * x).exp();
        let t_e = a * e + d;
        let dt_dt = (da + 2.0 * c * a * x * dm) * e;
        let dt_dth = -2.0 * c * a * x * e;
        let d2t_dth2 = a * e * (4.0 * c * c * x * x - 2.0 * c);
        let cot = theta.cos() / theta.sin();
        gamma * dt_dt - (d2t_dth2 + cot * dt_dth) + beta * t_e
    }
}

/// Error report of one artificial-source run.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SourceTestReport {
    pub n: usize,
    pub t_end: f64,
    /// Maximum grid L-inf error over the sampled times.
    pub linf: f64,
    /// Grid-weighted L2 error at t_end.
    pub l2: f64,
}

/// Integrate the modified problem gamma dT/dt + L T = rho from T_e(., 0)
/// and compare against the assumed solution.
pub fn artificial_source_run(
    which: ArtificialSource,
    n: usize,
    t_end: f64,
    p: &PhysicalParams,
    dp: &DimensionlessParams,
) -> Result<SourceTestReport> {
    let grid = Grid::new(n)?;
    let beta = dp.beta;
    let gamma = dp.gamma_water;
    let mut problem = FdmProblem::new(p, *dp, ContinentConfig::aquaplanet());
    problem.rho = Some(Box::new(move |th, t| which.rho(th, t, beta, gamma)));

    let state0 = SimulationState::from_fn(grid, 0.0, |th| which.exact(th, 0.0));
    let sample_times: Vec<f64> = (1..=20).map(|i| t_end * i as f64 / 20.0).collect();
    let traj = integrate(
        &state0,
        t_end,
        &problem,
        &IntegrateOpts::default(),
        &sample_times,
    )?;

    let mut linf = 0.0f64;
    for s in &traj.samples {
        for i in 1..s.grid.n {
            let e = (s.temps[i] - which.exact(s.grid.theta[i], s.t)).abs();
            linf = linf.max(e);
        }
    }
    let last = traj.final_state();
    let mut l2 = 0.0;
    for i in 1..last.grid.n {
        let e = last.temps[i] - which.exact(last.grid.theta[i], last.t);
        l2 += e * e * last.grid.h;
    }
    Ok(SourceTestReport {
        n,
        t_end,
        linf,
        l2: l2.sqrt(),
    })
}
