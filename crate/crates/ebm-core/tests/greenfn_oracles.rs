//! Independent oracles for the Legendre basis and the Green's kernel:
//! direct integration of the defining ODE, high-order finite differences of
//! the operator, the jump and continuity conditions, and the complex
//! paper-style expression for K.

use std::f64::consts::PI;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use ebm_core::greenfn::{basis_u0, conical_degree, reference, GreenKernel, Side};

const BETA: f64 = 1.0 / 0.208;

/// RK4 integration of y'' + cot(th) y' = beta y from a Taylor seed near the
/// pole; completely independent of the series evaluation.
fn ode_integrate_u0(beta: f64, theta_end: f64) -> (f64, f64) {
    let theta0 = 1e-6;
    let mut y = 1.0 + beta * theta0 * theta0 / 4.0;
    let mut dy = beta * theta0 / 2.0;
    let mut th = theta0;
    let n_steps = 400_000usize;
    let dt = (theta_end - theta0) / n_steps as f64;
    let f = |th: f64, y: f64, dy: f64| (dy, beta * y - (th.cos() / th.sin()) * dy);
    for _ in 0..n_steps {
        let (k1y, k1d) = f(th, y, dy);
        let (k2y, k2d) = f(th + dt / 2.0, y + dt / 2.0 * k1y, dy + dt / 2.0 * k1d);
        let (k3y, k3d) = f(th + dt / 2.0, y + dt / 2.0 * k2y, dy + dt / 2.0 * k2d);
        let (k4y, k4d) = f(th + dt, y + dt * k3y, dy + dt * k3d);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        dy += dt / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
        th += dt;
    }
    (y, dy)
}

#[test]
fn basis_matches_ode_integration() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let (y, dy) = ode_integrate_u0(BETA, PI / 2.0);
    assert!(
        (basis_u0(PI / 2.0, &kernel) - y).abs() < 1e-8,
        "u0(pi/2) = {} vs ODE {}",
        basis_u0(PI / 2.0, &kernel),
        y
    );
    assert!((kernel.u0_prime(PI / 2.0) - dy).abs() < 1e-7);
    // Also across the series split, inside the logarithmic branch.
    let (y2, _) = ode_integrate_u0(BETA, 2.4);
    assert!((kernel.u0(2.4) - y2).abs() < 1e-7, "{} vs {}", kernel.u0(2.4), y2);
}

/// Apply the operator L = -(d2 + cot d1) + beta via 6th-order central
/// differences of a scalar function.
fn operator_residual(f: impl Fn(f64) -> f64, theta: f64, beta: f64) -> f64 {
    let h = 1e-3;
    let stencil_d2 = [
        (3, 1.0 / 90.0),
        (2, -3.0 / 20.0),
        (1, 3.0 / 2.0),
        (0, -49.0 / 18.0),
    ];
    let mut d2 = 0.0;
    for &(k, w) in &stencil_d2 {
        if k == 0 {
            d2 += w * f(theta);
        } else {
            d2 += w * (f(theta + k as f64 * h) + f(theta - k as f64 * h));
        }
    }
    d2 /= h * h;
    let stencil_d1 = [(3, 1.0 / 60.0), (2, -3.0 / 20.0), (1, 3.0 / 4.0)];
    let mut d1 = 0.0;
    for &(k, w) in &stencil_d1 {
        d1 += w * (f(theta + k as f64 * h) - f(theta - k as f64 * h));
    }
    d1 /= h;
    -(d2 + (theta.cos() / theta.sin()) * d1) + beta * f(theta)
}

#[test]
fn basis_satisfies_legendre_ode() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let resid = operator_residual(|t| kernel.u0(t), 1.0, BETA);
    assert!(resid.abs() < 1e-6, "ODE residual at theta = 1: {resid}");
}

#[test]
fn kernel_annihilated_by_operator_off_diagonal() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let xi = 1.0;
    let resid = operator_residual(|t| kernel.k(t, xi), 2.0, BETA);
    assert!(resid.abs() < 1e-6, "L K residual at (2, 1): {resid}");
}

#[test]
fn jump_condition_at_random_points() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let mut rng = StdRng::seed_from_u64(20260810);
    for _ in 0..20 {
        let xi: f64 = rng.gen_range(0.1..PI - 0.1);
        let jump = kernel.jump(xi);
        assert!(
            (jump + 1.0 / xi.sin()).abs() < 1e-6,
            "xi = {xi}: jump {jump} vs {}",
            -1.0 / xi.sin()
        );
        // One-sided finite differences of K confirm the analytic limits.
        let h = 1e-7;
        let right_fd = (kernel.k(xi + h, xi) - kernel.k(xi, xi)) / h;
        let left_fd = (kernel.k(xi, xi) - kernel.k(xi - h, xi)) / h;
        assert!((right_fd - kernel.k_dtheta(xi, xi, Side::Right)).abs() < 1e-4);
        assert!((left_fd - kernel.k_dtheta(xi, xi, Side::Left)).abs() < 1e-4);
    }
}

#[test]
fn kernel_continuity_across_diagonal() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let xi: f64 = rng.gen_range(0.1..PI - 0.1);
        let gap = (kernel.k(xi + 1e-8, xi) - kernel.k(xi - 1e-8, xi)).abs();
        assert!(gap < 1e-6, "xi = {xi}: continuity gap {gap}");
    }
}

#[test]
fn real_product_form_matches_paper_expression() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let lambda = conical_degree(BETA).lambda;
    let mut worst = 0.0f64;
    for i in 0..20 {
        for j in 0..20 {
            let theta = 0.3 + (PI - 0.6) * i as f64 / 19.0;
            let xi = 0.3 + (PI - 0.6) * j as f64 / 19.0;
            let real_form = kernel.k(theta, xi);
            let complex_form = reference::kernel_paper_form(lambda, theta, xi);
            assert!(complex_form.im.abs() < 1e-9, "imaginary leak at ({theta}, {xi})");
            worst = worst.max((real_form - complex_form.re).abs());
        }
    }
    assert!(worst < 1e-10, "worst grid deviation {worst}");
}

#[test]
fn pole_regularity_and_positivity() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let mut interior_max = 0.0f64;
    for i in 1..40 {
        for j in 1..40 {
            let theta = PI * i as f64 / 40.0;
            let xi = PI * j as f64 / 40.0;
            let v = kernel.k(theta, xi);
            assert!(v > 0.0, "K({theta}, {xi}) = {v} not positive");
            interior_max = interior_max.max(v.abs());
        }
    }
    for j in 1..40 {
        let xi = PI * j as f64 / 40.0;
        for theta in [1e-6, PI - 1e-6] {
            let v = kernel.k(theta, xi).abs();
            assert!(
                v <= 10.0 * interior_max,
                "K({theta}, {xi}) = {v} vs interior max {interior_max}"
            );
        }
    }
}

#[test]
fn kernel_derivative_vanishes_at_poles() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let xi = 1.0;
    let v = 1e-6f64.sin() * kernel.k_dtheta(1e-6, xi, Side::Left);
    assert!(v.abs() < 1e-9, "sin * dK at north pole: {v}");
    let v = (PI - 1e-6f64).sin() * kernel.k_dtheta(PI - 1e-6, xi, Side::Right);
    assert!(v.abs() < 1e-9, "sin * dK at south pole: {v}");
    // Observed decay rate of the derivative itself: linear in theta
    // (u0' ~ beta theta / 2 near the pole).
    let d1 = kernel.k_dtheta(1e-3, xi, Side::Left);
    let d2 = kernel.k_dtheta(2e-3, xi, Side::Left);
    let rate = d2 / d1;
    assert!((rate - 2.0).abs() < 0.01, "derivative decay not linear: {rate}");
}

#[test]
fn mirror_symmetry_of_basis() {
    let kernel = GreenKernel::new(BETA).unwrap();
    for i in 1..60 {
        let theta = PI * i as f64 / 60.0;
        assert!((kernel.upi(theta) - kernel.u0(PI - theta)).abs() < 1e-10);
    }
}

#[test]
fn closed_form_weighted_integrals_match_quadrature() {
    let kernel = GreenKernel::new(BETA).unwrap();
    let mut worst = 0.0f64;
    for (a, b) in [(0.0, 0.8), (0.4, 1.7), (1.2, 2.8), (2.0, PI), (0.0, PI)] {
        for (g0, g1) in [(-46.7, 33.2), (1.0, 0.0)] {
            let (i0, ipi) = kernel.int_sin_basis_poly(a, b, g0, g1);
            let q0 = ebm_core::quad::integrate(
                |t: f64| {
                    let s = t.sin();
                    s * kernel.u0(t) * (g0 + g1 * s * s)
                },
                a,
                b,
                1e-11,
            )
            .unwrap();
            let qpi = ebm_core::quad::integrate(
                |t: f64| {
                    let s = t.sin();
                    s * kernel.upi(t) * (g0 + g1 * s * s)
                },
                a,
                b,
                1e-11,
            )
            .unwrap();
            worst = worst.max((i0 - q0).abs()).max((ipi - qpi).abs());
        }
    }
    assert!(worst < 1e-9, "closed form vs quadrature worst {worst}");
}
