//! Error types shared across the solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EbmError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("ambiguous albedo: temperature {temperature} sits exactly at the {surface} threshold")]
    AmbiguousAlbedo { temperature: f64, surface: &'static str },

    #[error("numeric evaluation failure: {0}")]
    Numeric(String),

    #[error("quadrature did not converge on [{a}, {b}]: {panels} panels, error estimate {err:.3e}")]
    QuadratureNonConvergence { a: f64, b: f64, panels: usize, err: f64 },

    #[error("infeasible configuration: {0}")]
    InfeasibleConfiguration(String),

    #[error("degenerate linear sub-system (condition estimate {cond_estimate:.3e})")]
    DegenerateCase { cond_estimate: f64 },

    #[error("Newton iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("pole encountered at theta = {0}: stencil undefined, use ghost elimination")]
    PoleStencil(f64),

    #[error("step-size underflow at t = {t} (h = {h:.3e}); the problem is too stiff for the explicit integrator at this resolution")]
    Stiffness { t: f64, h: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, EbmError>;
