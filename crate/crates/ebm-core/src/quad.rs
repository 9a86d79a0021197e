//! Adaptive composite Gauss-Legendre quadrature.
//!
//! Integrands in the stationary solver are smooth inside each panel (all
//! kinks are split at region boundaries by the caller), so a nested
//! 16/32-point Gauss rule with panel halving converges very quickly.

use std::sync::OnceLock;

use crate::error::{EbmError, Result};

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Computed by Newton iteration on the Legendre recurrence; accurate to
/// machine precision for the orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

struct Rules {
    x16: Vec<f64>,
    w16: Vec<f64>,
    x32: Vec<f64>,
    w32: Vec<f64>,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let (x16, w16) = gauss_legendre(16);
        let (x32, w32) = gauss_legendre(32);
        Rules { x16, w16, x32, w32 }
    })
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let r = rules();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut i16 = 0.0;
    for (x, w) in r.x16.iter().zip(&r.w16) {
        i16 += w * f(mid + half * x);
    }
    let mut i32v = 0.0;
    let mut iabs = 0.0;
    for (x, w) in r.x32.iter().zip(&r.w32) {
        let v = f(mid + half * x);
        i32v += w * v;
        iabs += w * v.abs();
    }
    (half * i32v, half * (i32v - i16).abs(), half * iabs)
}

const MAX_PANELS: usize = 4096;

/// Integrate `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut stack = vec![(lo, hi)];
    let mut total = 0.0;
    let mut panels = 0usize;
    while let Some((pa, pb)) = stack.pop() {
        panels += 1;
        if panels > MAX_PANELS {
            return Err(EbmError::QuadratureNonConvergence {
                a,
                b,
                panels,
                err: f64::NAN,
            });
        }
        let (val, err, iabs) = panel(&f, pa, pb);
        // Share the budget in proportion to panel width, floored at the
        // roundoff level of the panel itself.
        let budget = tol * (pb - pa) / (hi - lo);
        let floor = 100.0 * f64::EPSILON * iabs;
        if err <= budget.max(floor) || pb - pa < 1e-13 {
            total += val;
        } else {
            let mid = 0.5 * (pa + pb);
            stack.push((pa, mid));
            stack.push((mid, pb));
        }
    }
    Ok(sign * total)
}

/// Integrate over [a, b], forcing panel splits at the sorted interior
/// breakpoints (integrand kinks).
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: f64,
) -> Result<f64> {
    let mut pts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    pts.push(a);
    for &x in breaks {
        if x > a && x < b {
            pts.push(x);
        }
    }
    pts.push(b);
    pts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(&f, w[0], w[1], tol * (w[1] - w[0]).abs() / (b - a).abs())?;
    }
    Ok(total)
}
