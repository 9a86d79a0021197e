//! Helpers shared by the integration suites.

use ebm_core::bim::StationarySolution;
use ebm_core::fdm::{integrate, rhs_norm_inf, FdmProblem, Grid, IntegrateOpts, SimulationState};

/// Interpolate a solution profile onto a grid (landmarks are profile
/// points, so linear interpolation keeps the kinks).
pub fn profile_on_grid(sol: &StationarySolution, grid: &Grid) -> Vec<f64> {
    ebm_core::bifurcation::profile_on_grid(sol, grid)
}

/// Integrate in segments until the right-hand side drops below `rhs_tol`
/// or the horizon is reached; returns the final state and its rhs norm.
pub fn relax_to_steady(
    state0: SimulationState,
    problem: &FdmProblem<'_>,
    t_max: f64,
    rhs_tol: f64,
) -> (SimulationState, f64) {
    let mut state = state0;
    let segment = 10.0;
    // Tight tolerances: the controller's per-step error sets the noise
    // floor of the rhs norm at the fixed point (amplified by the stiff
    // modes), so the default 1e-6 would plateau around 1e-3.
    let opts = IntegrateOpts {
        rtol: 1e-10,
        atol: 1e-13,
        ..Default::default()
    };
    let mut r = rhs_norm_inf(&state, problem);
    while state.t < t_max && r > rhs_tol {
        let target = (state.t + segment).min(t_max);
        let traj = integrate(&state, target, problem, &opts, &[])
            .expect("relaxation segment integrates");
        state = traj.final_state().clone();
        r = rhs_norm_inf(&state, problem);
    }
    (state, r)
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
