//! Legendre basis of complex (conical) degree and the Green's kernel
//! K(theta, xi) of the stationary operator, with one-sided derivative limits.
//!
//! The kernel is evaluated in a real product form
//!
//! ```text
//! K(theta, xi) = c_lambda * u0(min) * upi(max),
//! u0(theta)  = P_lambda(cos theta),   upi(theta) = u0(pi - theta),
//! ```
//!
//! which follows from the connection formula
//! `P_l(-x) = cos(l pi) P_l(x) - (2/pi) sin(l pi) Q_l(x)` and the constancy of
//! `P_l Q_{l+1} - P_{l+1} Q_l = -1/(l+1)`. For conical degree
//! `lambda = -1/2 + i mu` the constant is `c_lambda = pi / (2 cosh(pi mu))`.
//! The paper-style complex expression is kept in [`reference`] and the
//! equivalence of the two routes is asserted by the validation suite.
//!
//! `u0` itself is summed from the Gauss series
//! `P_lambda(cos theta) = 2F1(-lambda, lambda+1; 1; sin^2(theta/2))`, whose
//! coefficients are real (`a_{n+1}/a_n = (n(n+1)+beta)/(n+1)^2`); past the
//! midpoint the logarithmic connection series at `pi - theta` takes over so
//! both branches stay well inside their convergence radius.

use num_complex::Complex64;

use crate::error::{EbmError, Result};

/// Degree lambda of the Legendre basis, lambda(lambda+1) = -beta.
#[derive(Debug, Clone, Copy)]
pub struct ConicalDegree {
    pub lambda: Complex64,
}

impl ConicalDegree {
    /// Imaginary part of lambda; positive exactly when beta > 1/4.
    pub fn mu(&self) -> f64 {
        self.lambda.im
    }
}

/// lambda = (sqrt(1 - 4 beta) - 1) / 2 with the principal square root.
pub fn conical_degree(beta: f64) -> ConicalDegree {
    let root = Complex64::new(1.0 - 4.0 * beta, 0.0).sqrt();
    ConicalDegree {
        lambda: (root - 1.0) / 2.0,
    }
}

/// Which one-sided limit of the kernel derivative to take on the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// theta -> xi from below (the K_- branch).
    Left,
    /// theta -> xi from above (the K_+ branch).
    Right,
}

const MAX_TERMS: usize = 420;
const SPLIT: f64 = std::f64::consts::FRAC_PI_2;

/// Evaluator for the basis solutions and the kernel at fixed beta.
///
/// Immutable after construction; all tables are precomputed, so concurrent
/// evaluation is safe and deterministic.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    pub degree: ConicalDegree,
    pub beta: f64,
    c_lambda: f64,
    /// Series coefficients a_n of 2F1(-lambda, lambda+1; 1; z).
    coeff: Vec<f64>,
    /// d_n = 2 psi(n+1) - psi(n - lambda) - psi(n + 1 + lambda) for the
    /// logarithmic branch.
    dlog: Vec<f64>,
    /// a_n * d_n, precomputed for the weighted integrals.
    coeff_dlog: Vec<f64>,
    /// -sin(lambda pi) / pi.
    log_prefactor: f64,
}

fn digamma(mut z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    while z.re < 12.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let inv2 = 1.0 / (z * z);
    // Asymptotic series, |z| >= 12 keeps the truncation below 1e-15.
    let tail = inv2
        * (1.0 / 12.0
            + inv2
                * (-1.0 / 120.0
                    + inv2
                        * (1.0 / 252.0
                            + inv2
                                * (-1.0 / 240.0
                                    + inv2 * (1.0 / 132.0 + inv2 * (-691.0 / 32760.0))))));
    acc + z.ln() - 0.5 / z - tail
}

impl GreenKernel {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(EbmError::InvalidParameter(format!(
                "Green kernel needs beta > 0, got {beta}"
            )));
        }
        let degree = conical_degree(beta);
        let lambda = degree.lambda;

        let sin_lpi = (lambda * std::f64::consts::PI).sin();
        let c_complex = -Complex64::new(std::f64::consts::PI, 0.0) / (2.0 * sin_lpi);
        let pref_complex = -sin_lpi / std::f64::consts::PI;
        debug_assert!(c_complex.im.abs() < 1e-10 * (1.0 + c_complex.re.abs()));

        let mut coeff = Vec::with_capacity(MAX_TERMS);
        coeff.push(1.0);
        for n in 0..MAX_TERMS - 1 {
            let nf = n as f64;
            let next = coeff[n] * (nf * (nf + 1.0) + beta) / ((nf + 1.0) * (nf + 1.0));
            coeff.push(next);
        }

        let mut dlog = Vec::with_capacity(MAX_TERMS);
        let d0 = 2.0 * digamma(Complex64::new(1.0, 0.0)).re
            - (digamma(-lambda) + digamma(lambda + 1.0)).re;
        dlog.push(d0);
        for n in 0..MAX_TERMS - 1 {
            let nf = n as f64;
            let next = dlog[n] + 2.0 / (nf + 1.0) - (2.0 * nf + 1.0) / (nf * (nf + 1.0) + beta);
            dlog.push(next);
        }

        let coeff_dlog: Vec<f64> = coeff.iter().zip(&dlog).map(|(a, d)| a * d).collect();

        Ok(Self {
            degree,
            beta,
            c_lambda: c_complex.re,
            coeff,
            dlog,
            coeff_dlog,
            log_prefactor: pref_complex.re,
        })
    }

    /// The real kernel constant; pi / (2 cosh(pi mu)) at conical degree.
    pub fn c_lambda(&self) -> f64 {
        self.c_lambda
    }

    fn series_near_zero(&self, theta: f64) -> (f64, f64) {
        let half = 0.5 * theta;
        let s = half.sin();
        let z = s * s;
        let mut sum = 0.0;
        let mut dsum = 0.0;
        let mut zp = 1.0;
        for (n, &a) in self.coeff.iter().enumerate() {
            let term = a * zp;
            sum += term;
            if n >= 1 {
                dsum += (n as f64) * a * zp / z.max(1e-300);
            }
            if n > 4 && term.abs() < 1e-18 * sum.abs() {
                break;
            }
            zp *= z;
        }
        // dz/dtheta = sin(theta)/2.
        (sum, dsum * 0.5 * theta.sin())
    }

    fn series_near_pi(&self, theta: f64) -> (f64, f64) {
        let half = 0.5 * theta;
        let c = half.cos();
        let w = c * c;
        if w <= 0.0 {
            return (f64::INFINITY, f64::NEG_INFINITY);
        }
        let lw = w.ln();
        let mut sum = 0.0;
        let mut dsum = 0.0;
        let mut wp = 1.0; // w^n
        for (n, (&a, &d)) in self.coeff.iter().zip(&self.dlog).enumerate() {
            let bracket = d - lw;
            let term = a * bracket * wp;
            sum += term;
            let nf = n as f64;
            // d/dw [a (d_n - ln w) w^n] = a w^{n-1} (n (d_n - ln w) - 1)
            dsum += a * (nf * bracket - 1.0) * wp / w;
            if n > 4 && term.abs() < 1e-18 * sum.abs().max(1.0) {
                break;
            }
            wp *= w;
        }
        // dw/dtheta = -sin(theta)/2.
        (
            self.log_prefactor * sum,
            self.log_prefactor * dsum * (-0.5) * theta.sin(),
        )
    }

    fn u0_pair(&self, theta: f64) -> (f64, f64) {
        if theta <= SPLIT {
            self.series_near_zero(theta)
        } else {
            self.series_near_pi(theta)
        }
    }

    /// u0(theta) = P_lambda(cos theta); regular at theta = 0, u0(0) = 1.
    pub fn u0(&self, theta: f64) -> f64 {
        self.u0_pair(theta).0
    }

    /// d u0 / d theta.
    pub fn u0_prime(&self, theta: f64) -> f64 {
        self.u0_pair(theta).1
    }

    /// upi(theta) = u0(pi - theta); regular at theta = pi.
    pub fn upi(&self, theta: f64) -> f64 {
        self.u0(std::f64::consts::PI - theta)
    }

    /// d upi / d theta.
    pub fn upi_prime(&self, theta: f64) -> f64 {
        -self.u0_prime(std::f64::consts::PI - theta)
    }

    /// K(theta, xi); continuous across the diagonal, finite for
    /// (theta, xi) in [0, pi]^2 away from the corner theta = xi = pi.
    pub fn k(&self, theta: f64, xi: f64) -> f64 {
        let (lo, hi) = if theta <= xi { (theta, xi) } else { (xi, theta) };
        self.c_lambda * self.u0(lo) * self.upi(hi)
    }

    /// One-sided theta-derivative of K. Off the diagonal the side is
    /// determined by the arguments; on it, `side` selects the branch.
    pub fn k_dtheta(&self, theta: f64, xi: f64, side: Side) -> f64 {
        let minus_branch = theta < xi || (theta == xi && side == Side::Left);
        if minus_branch {
            self.c_lambda * self.u0_prime(theta) * self.upi(xi)
        } else {
            self.c_lambda * self.u0(xi) * self.upi_prime(theta)
        }
    }

    /// Derivative jump across the diagonal, d K(xi+) - d K(xi-); equals
    /// -1/sin(xi) by construction of the kernel.
    pub fn jump(&self, xi: f64) -> f64 {
        self.k_dtheta(xi, xi, Side::Right) - self.k_dtheta(xi, xi, Side::Left)
    }

    /// Integrals of the ascending and logarithmic series against a quadratic
    /// weight, int x^n (q0 + q1 x + q2 x^2) dx and its (d_n - ln x)
    /// counterpart, over [x_lo, x_hi] inside [0, 1/2]. Closed form through
    /// int x^n dx and int x^n ln x dx.
    fn series_poly_integrals(&self, x_lo: f64, x_hi: f64, q: [f64; 3]) -> (f64, f64) {
        debug_assert!((0.0..=0.5 + 1e-12).contains(&x_lo) && x_lo <= x_hi + 1e-15);
        if x_hi - x_lo <= 0.0 {
            return (0.0, 0.0);
        }
        let ln_lo = if x_lo > 0.0 { x_lo.ln() } else { 0.0 };
        let ln_hi = x_hi.ln();
        let mut asc = 0.0;
        let mut logpart = 0.0;
        // Running powers x^{n+1}.
        let mut p_lo = x_lo;
        let mut p_hi = x_hi;
        let mut b_prev2 = 0.0; // conv entries from earlier a-coefficients
        let mut b_prev1 = 0.0;
        let mut bd_prev2 = 0.0;
        let mut bd_prev1 = 0.0;
        for n in 0..self.coeff.len() + 2 {
            let a_n = self.coeff.get(n).copied().unwrap_or(0.0);
            let ad_n = self.coeff_dlog.get(n).copied().unwrap_or(0.0);
            // b_n = sum_j a_{n-j} q_j with the shift registers holding
            // a_{n-1}, a_{n-2}.
            let b_n = a_n * q[0] + b_prev1 * q[1] + b_prev2 * q[2];
            let bd_n = ad_n * q[0] + bd_prev1 * q[1] + bd_prev2 * q[2];
            b_prev2 = b_prev1;
            b_prev1 = a_n;
            bd_prev2 = bd_prev1;
            bd_prev1 = ad_n;

            let np1 = (n + 1) as f64;
            let d_pow = (p_hi - p_lo) / np1;
            // int x^n ln x dx = x^{n+1} (ln x / (n+1) - 1/(n+1)^2).
            let int_ln_hi = p_hi * (ln_hi / np1 - 1.0 / (np1 * np1));
            let int_ln_lo = if x_lo > 0.0 {
                p_lo * (ln_lo / np1 - 1.0 / (np1 * np1))
            } else {
                0.0
            };
            let d_ln = int_ln_hi - int_ln_lo;

            let asc_term = b_n * d_pow;
            let log_term = bd_n * d_pow - b_n * d_ln;
            asc += asc_term;
            logpart += log_term;
            if n > 6 && asc_term.abs() + log_term.abs() < 1e-18 * (1.0 + asc.abs() + logpart.abs())
            {
                break;
            }
            p_lo *= x_lo;
            p_hi *= x_hi;
        }
        (asc, self.log_prefactor * logpart)
    }

    /// Closed-form weighted basis integrals over [a, b] in theta:
    ///
    /// ```text
    /// int_a^b sin(th) u0(th)  (g0 + g1 sin^2 th) dth
    /// int_a^b sin(th) upi(th) (g0 + g1 sin^2 th) dth
    /// ```
    ///
    /// In the half-angle variables z = sin^2(th/2) (w = cos^2(th/2) past the
    /// equator) both basis series are power series, sin^2 th = 4x(1-x) and
    /// sin(th) dth = +-2 dx, so the integrals reduce to the series-against-
    /// polynomial primitives above. Source terms are linear in the
    /// insolation, hence exactly of this form.
    pub fn int_sin_basis_poly(&self, a: f64, b: f64, g0: f64, g1: f64) -> (f64, f64) {
        debug_assert!(a <= b + 1e-15);
        let half = std::f64::consts::FRAC_PI_2;
        // Weight in the half-angle variable: g0 + g1*4x(1-x).
        let q = [g0, 4.0 * g1, -4.0 * g1];
        let mut i_u0 = 0.0;
        let mut i_upi = 0.0;
        if a < half {
            let zb = {
                let s = (b.min(half) / 2.0).sin();
                (s * s).min(0.5)
            };
            let za = {
                let s = (a / 2.0).sin();
                s * s
            };
            let (asc, logp) = self.series_poly_integrals(za, zb, q);
            // u0 is the ascending series in z, upi the logarithmic one.
            i_u0 += 2.0 * asc;
            i_upi += 2.0 * logp;
        }
        if b > half {
            let wa = {
                let c = (a.max(half) / 2.0).cos();
                (c * c).min(0.5)
            };
            let wb = {
                let c = (b / 2.0).cos();
                c * c
            };
            let (asc, logp) = self.series_poly_integrals(wb, wa, q);
            // Past the equator the roles swap.
            i_u0 += 2.0 * logp;
            i_upi += 2.0 * asc;
        }
        (i_u0, i_upi)
    }
}

/// Value of the regular basis solution; thin named wrapper over
/// [`GreenKernel::u0`].
pub fn basis_u0(theta: f64, kernel: &GreenKernel) -> f64 {
    kernel.u0(theta)
}

/// Paper-style complex-arithmetic evaluation of the same objects.
///
/// Everything here goes through complex Legendre functions P and Q and the
/// piecewise ratio expression for K, with the Wronskian denominator computed
/// numerically. It is deliberately slow and independent of the real product
/// form; the validation suite pins the two against each other.
pub mod reference {
    use num_complex::Complex64;

    /// P_lambda(x) for real x in (-1, 1], complex degree, by the Gauss
    /// series at argument (1-x)/2.
    pub fn legendre_p(lambda: Complex64, x: f64) -> Complex64 {
        let z = 0.5 * (1.0 - x);
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 0..400_000u64 {
            let nf = n as f64;
            term *= (nf - lambda) * (nf + 1.0 + lambda) * z / ((nf + 1.0) * (nf + 1.0));
            sum += term;
            if n > 8 && term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    }

    /// Q_lambda(x) on the cut through the connection with P at +-x.
    pub fn legendre_q(lambda: Complex64, x: f64) -> Complex64 {
        let lpi = lambda * std::f64::consts::PI;
        (std::f64::consts::PI / 2.0) * (lpi.cos() * legendre_p(lambda, x) - legendre_p(lambda, -x))
            / lpi.sin()
    }

    /// The piecewise kernel exactly as displayed in the stationary-solver
    /// derivation, Wronskian denominator and all.
    pub fn kernel_paper_form(lambda: Complex64, theta: f64, xi: f64) -> Complex64 {
        let pi = std::f64::consts::PI;
        let lpi = lambda * pi;
        let cot = lpi.cos() / lpi.sin();
        let (x_small, x_large) = if theta > xi {
            (xi.cos(), theta.cos())
        } else {
            (theta.cos(), xi.cos())
        };
        let numerator = legendre_p(lambda, x_small)
            * (pi * cot * legendre_p(lambda, x_large) - 2.0 * legendre_q(lambda, x_large));
        let xc = xi.cos();
        let denominator = 2.0
            * (lambda + 1.0)
            * (legendre_p(lambda, xc) * legendre_q(lambda + 1.0, xc)
                - legendre_p(lambda + 1.0, xc) * legendre_q(lambda, xc));
        numerator / denominator
    }
}
