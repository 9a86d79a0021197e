use ebm_core::bim::{enumerate_equilibria, EnumerateOpts};
use ebm_core::fdm::*;
use ebm_core::greenfn::GreenKernel;
use ebm_core::params::*;

fn main() {
    let q = 247.0;
    let p = PhysicalParams::default();
    let dp = nondimensionalize(&p, q).unwrap();
    let kernel = GreenKernel::new(dp.beta).unwrap();
    let config = ContinentConfig::aquaplanet();
    let sols = enumerate_equilibria(&p, &config, q, &kernel, &EnumerateOpts::default(), &vec![]).unwrap();
    let medium = sols.iter().filter(|s| s.case_name == "aqua-two-edges")
        .find(|s| (s.theta_c[0] - 0.7509).abs() < 1e-2).unwrap();
    println!("crits: {:?}", medium.theta_c);
    for n in [400usize, 800] {
        let grid = Grid::new(n).unwrap();
        let t_bim = ebm_core::bifurcation::profile_on_grid(medium, &grid);
        let problem = FdmProblem::new(&p, dp, config).with_albedo(AlbedoMode::Step);
        let mut state = SimulationState::new(grid.clone(), 0.0, t_bim.clone()).unwrap();
        let opts = IntegrateOpts { rtol: 1e-10, atol: 1e-13, ..Default::default() };
        while state.t < 300.0 {
            let traj = integrate(&state, state.t + 10.0, &problem, &opts, &[]).unwrap();
            state = traj.final_state().clone();
            if rhs_norm_inf(&state, &problem) < 1e-6 { break; }
        }
        let r = rhs_norm_inf(&state, &problem);
        let mut max_d = 0.0; let mut arg = 0usize;
        for i in 0..=n {
            let d = (state.temps[i] - t_bim[i]).abs();
            if d > max_d { max_d = d; arg = i; }
        }
        println!("N={n}: rhs={r:.1e} maxdev={max_d:.3e} at theta={:.4} (crit at {:.4}); dev at pole: {:.1e}, at equator: {:.1e}",
            grid.theta[arg], medium.theta_c[0], (state.temps[2]-t_bim[2]).abs(), (state.temps[n/2]-t_bim[n/2]).abs());
    }
}
