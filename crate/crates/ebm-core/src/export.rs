//! Deterministic file output: fixed-precision floats, stable orderings.

use crate::bifurcation::Diagram;
use crate::bim::StationarySolution;
use crate::fdm::Trajectory;
use crate::params::PhysicalParams;

/// 17 significant digits, enough to round-trip any f64; '.' decimal,
/// LF endings are the writers' responsibility.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Profile CSV: theta_rad, T_dimensionless, T_celsius.
pub fn profile_csv(sol: &StationarySolution, p: &PhysicalParams) -> String {
    let mut out = String::from("theta_rad,T_dimensionless,T_celsius\n");
    for &(theta, t) in &sol.profile {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt_f64(theta),
            fmt_f64(t),
            fmt_f64(p.t_s * t)
        ));
    }
    out
}

/// Landmark metadata sidecar for one solution.
pub fn solution_sidecar(sol: &StationarySolution, p: &PhysicalParams) -> serde_json::Value {
    serde_json::json!({
        "case": sol.case_name,
        "q": sol.q,
        "theta_c": sol.theta_c,
        "residual_norm": sol.residual_norm,
        "t_mean_dimensionless": sol.t_mean,
        "t_mean_celsius": p.t_s * sol.t_mean,
        "t_north": sol.unknowns.t_north,
        "t_south": sol.unknowns.t_south,
        "t_equator": sol.unknowns.t_equator,
        "dt_at_theta_c": sol.unknowns.dt_at_c(),
        "half_domain": sol.half_domain,
        "n_profile_points": sol.profile.len(),
    })
}

/// Trajectory CSV: t, theta_rad, T.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,theta_rad,T\n");
    for state in &traj.samples {
        for (i, &temp) in state.temps.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_f64(state.t),
                fmt_f64(state.grid.theta[i]),
                fmt_f64(temp)
            ));
        }
    }
    out
}

/// Diagram CSV: Q, T_mean_C, case, stability, n_critical_latitudes.
pub fn diagram_csv(diagram: &Diagram) -> String {
    let mut out = String::from("Q,T_mean_C,case,stability,n_critical_latitudes\n");
    for pt in &diagram.points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f64(pt.q),
            fmt_f64(pt.t_mean_c),
            pt.case_name,
            match pt.stability {
                crate::stability::Verdict::Stable => "stable",
                crate::stability::Verdict::Unstable => "unstable",
                crate::stability::Verdict::Marginal => "marginal",
            },
            pt.n_crit
        ));
    }
    out
}

/// Folds CSV: branch_id, Q_fold, T_mean_fold.
pub fn folds_csv(diagram: &Diagram) -> String {
    let mut out = String::from("branch_id,Q_fold,T_mean_fold\n");
    for f in &diagram.folds {
        out.push_str(&format!(
            "{},{},{}\n",
            f.branch_id,
            fmt_f64(f.q_fold),
            fmt_f64(f.t_mean_fold)
        ));
    }
    out
}

/// Kernel table CSV: theta, xi, K, dK_minus, dK_plus.
pub fn greenfn_table_csv(
    kernel: &crate::greenfn::GreenKernel,
    thetas: &[f64],
    xis: &[f64],
) -> String {
    use crate::greenfn::Side;
    let mut out = String::from("theta,xi,K,dK_minus,dK_plus\n");
    for &xi in xis {
        for &theta in thetas {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt_f64(theta),
                fmt_f64(xi),
                fmt_f64(kernel.k(theta, xi)),
                fmt_f64(kernel.k_dtheta(theta, xi, Side::Left)),
                fmt_f64(kernel.k_dtheta(theta, xi, Side::Right))
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_has_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        for x in [std::f64::consts::PI, -1.5e-7, 247.0, 1.0 / 3.0] {
            let back: f64 = fmt_f64(x).parse().unwrap();
            assert_eq!(back, x, "round trip failed for {x}");
        }
    }
}
