//! Cross-module oracles: the stationary solutions of the boundary-integral
//! solver must be fixed points of the finite-difference dynamics, and the
//! smooth-albedo dynamics must reproduce them in the steep-ramp limit.

mod common;

use common::{linf, profile_on_grid, relax_to_steady};
use ebm_core::bim::{enumerate_equilibria, EnumerateOpts};
use ebm_core::fdm::{integrate, AlbedoMode, FdmProblem, Grid, IntegrateOpts, SimulationState};
use ebm_core::greenfn::GreenKernel;
use ebm_core::params::{nondimensionalize, ContinentConfig, PhysicalParams};

fn aquaplanet_solutions(q: f64) -> (PhysicalParams, Vec<ebm_core::bim::StationarySolution>) {
    let p = PhysicalParams::default();
    let dp = nondimensionalize(&p, q).unwrap();
    let kernel = GreenKernel::new(dp.beta).unwrap();
    let config = ContinentConfig::aquaplanet();
    let sols =
        enumerate_equilibria(&p, &config, q, &kernel, &EnumerateOpts::default(), &Vec::new())
            .unwrap();
    (p, sols)
}

#[test]
fn snowball_relaxation_hits_the_all_ice_solution() {
    let q = 247.0;
    let (p, sols) = aquaplanet_solutions(q);
    let all_ice = sols.iter().find(|s| s.case_name == "aqua-all-ice").unwrap();
    let dp = nondimensionalize(&p, q).unwrap();
    let problem = FdmProblem::new(&p, dp, ContinentConfig::aquaplanet());
    let grid = Grid::new(400).unwrap();
    let cold_start = SimulationState::from_fn(grid.clone(), 0.0, |_| -3.0);
    let (steady, r) = relax_to_steady(cold_start, &problem, 300.0, 1e-6);
    assert!(r < 1e-6, "relaxation stalled at rhs = {r:.2e}");
    let bim = profile_on_grid(all_ice, &grid);
    let d = linf(&steady.temps, &bim);
    assert!(d < 5e-3, "L-inf distance to the all-ice solution: {d:.2e}");
}

#[test]
fn stable_two_edge_equilibrium_is_an_fd_fixed_point() {
    let q = 247.0;
    let (p, sols) = aquaplanet_solutions(q);
    // The meridionally symmetric medium-cap state is the stable one.
    let medium = sols
        .iter()
        .filter(|s| s.case_name == "aqua-two-edges")
        .find(|s| (s.theta_c[0] - 0.7509).abs() < 1e-2)
        .expect("medium-cap root present");
    let dp = nondimensionalize(&p, q).unwrap();
    let problem =
        FdmProblem::new(&p, dp, ContinentConfig::aquaplanet()).with_albedo(AlbedoMode::Step);
    let grid = Grid::new(400).unwrap();
    let start = SimulationState::new(grid.clone(), 0.0, profile_on_grid(medium, &grid)).unwrap();
    let (steady, r) = relax_to_steady(start, &problem, 300.0, 1e-6);
    assert!(r < 1e-6, "no FD fixed point reached: rhs = {r:.2e}");
    let d = linf(&steady.temps, &profile_on_grid(medium, &grid));
    assert!(d < 5e-3, "fixed point drifted {d:.2e} from the BIM profile");

    // Zero perturbation of the fixed point stays put for ten time units.
    let traj = integrate(
        &steady,
        steady.t + 10.0,
        &problem,
        &IntegrateOpts::default(),
        &[],
    )
    .unwrap();
    let drift = linf(&traj.final_state().temps, &steady.temps);
    assert!(drift < 1e-4, "fixed point drifted {drift:.2e} in 10 units");
}

#[test]
fn smooth_albedo_reproduces_step_equilibrium() {
    let q = 247.0;
    let (p, sols) = aquaplanet_solutions(q);
    let medium = sols
        .iter()
        .filter(|s| s.case_name == "aqua-two-edges")
        .find(|s| (s.theta_c[0] - 0.7509).abs() < 1e-2)
        .unwrap();
    let dp = nondimensionalize(&p, q).unwrap();
    let problem =
        FdmProblem::new(&p, dp, ContinentConfig::aquaplanet()).with_albedo(AlbedoMode::Smooth);
    let grid = Grid::new(400).unwrap();
    let start = SimulationState::new(grid.clone(), 0.0, profile_on_grid(medium, &grid)).unwrap();
    let (steady, r) = relax_to_steady(start, &problem, 300.0, 1e-6);
    assert!(r < 1e-6);
    let d = linf(&steady.temps, &profile_on_grid(medium, &grid));
    assert!(d < 1e-2, "smooth steady state differs {d:.2e} from step equilibrium");
}
