//! Stationary-solver tests: Newton roots against spec'd behaviour, system
//! consistency checks, the independent all-ice quadrature route, and the
//! integral identity for the mean temperature.

use std::f64::consts::PI;

use ebm_core::bim::{
    cases_for, enumerate_equilibria, jacobian, newton_find, BieSystem, EnumerateOpts, NewtonOpts,
    NewtonOutcome,
};
use ebm_core::greenfn::GreenKernel;
use ebm_core::params::{
    continent_config, nondimensionalize, source_coeffs, ContinentConfig, PhysicalParams,
};
use ebm_core::quad;

fn setup(q: f64) -> (PhysicalParams, ebm_core::params::DimensionlessParams, GreenKernel) {
    let p = PhysicalParams::default();
    let dp = nondimensionalize(&p, q).unwrap();
    let kernel = GreenKernel::new(dp.beta).unwrap();
    (p, dp, kernel)
}

#[test]
fn three_guesses_three_roots() {
    let (p, dp, kernel) = setup(247.0);
    let config = ContinentConfig::aquaplanet();
    let cases = cases_for(&config);
    let case = cases.iter().find(|c| c.name == "aqua-two-edges").unwrap();
    let sys = BieSystem {
        case,
        config: &config,
        p: &p,
        dp: &dp,
        kernel: &kernel,
        quad_tol: 1e-10,
    };
    let mut roots = Vec::new();
    for guess in [[0.3, 2.85], [0.8, 2.4], [1.2, 2.0]] {
        match newton_find(&sys, &guess, &NewtonOpts::default()).unwrap() {
            NewtonOutcome::Converged(a) => {
                assert!(a.residual_norm_inf() < 1e-8);
                roots.push(a.theta_c.clone());
            }
            NewtonOutcome::Failed(r) => panic!("no root from {guess:?}: {r}"),
        }
    }
    for i in 0..roots.len() {
        for j in 0..i {
            let d = (roots[i][0] - roots[j][0]).abs() + (roots[i][1] - roots[j][1]).abs();
            assert!(d > 1e-3, "roots {i} and {j} coincide");
        }
        // Symmetric system: theta_c2 = pi - theta_c1.
        assert!(
            (roots[i][1] - (PI - roots[i][0])).abs() < 1e-8,
            "root {i} not meridionally symmetric: {:?}",
            roots[i]
        );
    }
}

#[test]
fn residual_jacobian_is_step_consistent() {
    let (p, dp, kernel) = setup(247.0);
    let config = ContinentConfig::aquaplanet();
    let cases = cases_for(&config);
    let case = cases.iter().find(|c| c.name == "aqua-two-edges").unwrap();
    let sys = BieSystem {
        case,
        config: &config,
        p: &p,
        dp: &dp,
        kernel: &kernel,
        quad_tol: 1e-10,
    };
    let base = sys.assemble(&[0.9, 2.3]).unwrap();
    let j6 = jacobian(&sys, &base, 1e-6).unwrap();
    let j5 = jacobian(&sys, &base, 1e-5).unwrap();
    for r in 0..2 {
        for c in 0..2 {
            let (a, b) = (j6[(r, c)], j5[(r, c)]);
            assert!(
                (a - b).abs() <= 1e-4 * (1.0 + a.abs()),
                "J[{r}][{c}]: {a} vs {b}"
            );
        }
    }
}

#[test]
fn uniform_cases_have_empty_residual_and_match_direct_quadrature() {
    let (p, dp, kernel) = setup(247.0);
    let config = ContinentConfig::aquaplanet();
    let cases = cases_for(&config);
    let case = cases.iter().find(|c| c.name == "aqua-all-ice").unwrap();
    let sys = BieSystem {
        case,
        config: &config,
        p: &p,
        dp: &dp,
        kernel: &kernel,
        quad_tol: 1e-10,
    };
    let a = sys.assemble(&[]).unwrap();
    assert!(a.residual.is_empty());
    // Independent route: T(xi) = int sin K(theta, xi) h2 dtheta by direct
    // quadrature of the kernel itself.
    let (g0, g1) = source_coeffs(true, ebm_core::params::Surface::Water, &dp, &p);
    for xi in [0.6, PI / 2.0, 2.5] {
        let direct = quad::integrate_split(
            |t: f64| {
                let s = t.sin();
                s * kernel.k(t, xi) * (g0 + g1 * s * s)
            },
            0.0,
            PI,
            &[xi],
            1e-10,
        )
        .unwrap();
        let via_solver = a.solution_at(xi).unwrap();
        assert!(
            (direct - via_solver).abs() < 1e-8,
            "xi = {xi}: {direct} vs {via_solver}"
        );
    }
}

#[test]
fn infeasible_guesses_are_rejected_not_crashed() {
    let (p, dp, kernel) = setup(247.0);
    let config = ContinentConfig::aquaplanet();
    let cases = cases_for(&config);
    let case = cases.iter().find(|c| c.name == "aqua-two-edges").unwrap();
    let sys = BieSystem {
        case,
        config: &config,
        p: &p,
        dp: &dp,
        kernel: &kernel,
        quad_tol: 1e-10,
    };
    for guess in [[2.3, 0.8], [0.0, 2.3], [1.0, 1.0]] {
        match newton_find(&sys, &guess, &NewtonOpts::default()).unwrap() {
            NewtonOutcome::Failed(_) => {}
            NewtonOutcome::Converged(_) => panic!("{guess:?} should be infeasible"),
        }
    }
}

#[test]
fn solution_consistency_invariants_at_247() {
    let (p, dp, kernel) = setup(247.0);
    let config = ContinentConfig::aquaplanet();
    let cases = cases_for(&config);
    let case = cases.iter().find(|c| c.name == "aqua-two-edges").unwrap();
    let sys = BieSystem {
        case,
        config: &config,
        p: &p,
        dp: &dp,
        kernel: &kernel,
        quad_tol: 1e-10,
    };
    let a = match newton_find(&sys, &[0.8, 2.4], &NewtonOpts::default()).unwrap() {
        NewtonOutcome::Converged(a) => a,
        NewtonOutcome::Failed(r) => panic!("{r}"),
    };
    // Every BIE of the case re-evaluates below 1e-6.
    assert!(a.verify_all_bies().unwrap() < 1e-6);
    // The profile touches the threshold at the critical latitudes.
    for &tc in &a.theta_c {
        let t = a.solution_at(tc).unwrap();
        assert!((t + 1.0).abs() < 1e-6, "T({tc}) = {t}");
    }
    // C1 matching at the landmarks.
    for m in a.c1_mismatches().unwrap() {
        assert!(m < 1e-5, "C1 mismatch {m}");
    }
    // Polar no-flux: sin(theta) T'(theta) small near both poles.
    for th in [1e-3, PI - 1e-3] {
        let grad = a.derivative_at(th).unwrap();
        assert!((th.sin() * grad).abs() < 1e-3, "flux at {th}: {}", th.sin() * grad);
    }
    // Meridional symmetry of the symmetric root.
    for xi in [0.31, 1.0, 1.4] {
        let a1 = a.solution_at(xi).unwrap();
        let a2 = a.solution_at(PI - xi).unwrap();
        assert!((a1 - a2).abs() < 1e-6, "asymmetry at {xi}: {a1} vs {a2}");
    }
}

#[test]
fn mean_matches_integral_identity() {
    // Integrating the stationary equation over the sphere turns the
    // diffusion term into a vanishing boundary flux, so
    // int T sin = (1/beta) sum_regions int h sin: an independent oracle for
    // the quadrature-based mean.
    let (p, dp, kernel) = setup(247.0);
    let config = ContinentConfig::aquaplanet();
    let opts = EnumerateOpts::default();
    let sols = enumerate_equilibria(&p, &config, 247.0, &kernel, &opts, &Vec::new()).unwrap();
    assert!(!sols.is_empty());
    for sol in &sols {
        let mut rhs_integral = 0.0;
        let mut bounds = vec![0.0];
        bounds.extend(sol.theta_c.iter().copied());
        bounds.push(PI);
        for w in bounds.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let t_mid = sol
                .profile
                .iter()
                .min_by(|a, b| {
                    (a.0 - mid).abs().partial_cmp(&(b.0 - mid).abs()).unwrap()
                })
                .unwrap()
                .1;
            let ice = t_mid < -1.0;
            let (g0, g1) = source_coeffs(ice, ebm_core::params::Surface::Water, &dp, &p);
            rhs_integral += quad::integrate(
                |t: f64| {
                    let s = t.sin();
                    s * (g0 + g1 * s * s)
                },
                w[0],
                w[1],
                1e-12,
            )
            .unwrap();
        }
        let identity_mean = rhs_integral / (2.0 * dp.beta);
        assert!(
            (sol.t_mean - identity_mean).abs() < 1e-7,
            "{}: quadrature mean {} vs identity {}",
            sol.case_name,
            sol.t_mean,
            identity_mean
        );
    }
}

#[test]
fn accepted_solutions_respect_their_ice_pattern() {
    let (p, dp, kernel) = setup(299.0);
    let config = continent_config(PI / 4.0, 0.0).unwrap();
    let sols =
        enumerate_equilibria(&p, &config, 299.0, &kernel, &EnumerateOpts::default(), &Vec::new())
            .unwrap();
    assert!(!sols.is_empty());
    for sol in &sols {
        // Between landmarks the profile must stay on the claimed side of
        // the local threshold; sample away from the touch points.
        let mut bounds = vec![0.0];
        bounds.extend(sol.theta_c.iter().copied());
        if config.theta_l1 < PI {
            bounds.push(config.theta_l1);
            bounds.push(config.theta_l2);
        }
        bounds.push(PI);
        bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in bounds.windows(2) {
            if w[1] - w[0] < 1e-3 {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let surface = config.surface_at(mid);
            let thr = dp.threshold(surface);
            let interior: Vec<&(f64, f64)> = sol
                .profile
                .iter()
                .filter(|(th, _)| *th > w[0] + 1e-4 && *th < w[1] - 1e-4)
                .collect();
            if interior.is_empty() {
                continue;
            }
            let above = interior.iter().filter(|(_, t)| *t > thr).count();
            // All interior points on one side (allowing boundary-grazing
            // within the validity tolerance).
            let frac = above as f64 / interior.len() as f64;
            assert!(
                frac < 0.02 || frac > 0.98,
                "{}: mixed-sign region [{:.3}, {:.3}]",
                sol.case_name,
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn symmetric_config_solutions_come_with_mirrors() {
    let (p, _, kernel) = setup(294.0);
    let config = continent_config(PI / 4.0, 0.0).unwrap();
    let sols =
        enumerate_equilibria(&p, &config, 294.0, &kernel, &EnumerateOpts::default(), &Vec::new())
            .unwrap();
    for sol in &sols {
        let mirrored: Vec<f64> = sol.theta_c.iter().rev().map(|&t| PI - t).collect();
        // The mirror image must be present as an equilibrium with matching
        // critical latitudes and identical mean temperature.
        let partner = sols.iter().find(|other| {
            other.theta_c.len() == mirrored.len()
                && other
                    .theta_c
                    .iter()
                    .zip(&mirrored)
                    .all(|(a, b)| (a - b).abs() < 1e-6)
                && (other.t_mean - sol.t_mean).abs() < 1e-6
        });
        assert!(
            partner.is_some(),
            "no mirror equilibrium for {} {:?}",
            sol.case_name,
            sol.theta_c
        );
    }
}
