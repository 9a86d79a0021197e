//! Numerical laboratory for a one-dimensional diffusive energy balance model
//! on the sphere with ice-albedo feedback.
//!
//! The crate provides four cooperating solvers:
//!
//! * [`bim`] — stationary solutions through boundary integral equations built
//!   on the conical-Legendre Green's kernel in [`greenfn`], with Newton root
//!   search for the critical latitudes and multi-start enumeration of
//!   coexisting equilibria;
//! * [`fdm`] — a method-of-lines finite-difference integrator for the
//!   time-dependent equation, plus the artificial-source verification
//!   harness;
//! * [`stability`] — classification of equilibria by the discretized
//!   perturbation eigenproblem, the slope of the bifurcation branch, or
//!   perturbed dynamic runs;
//! * [`bifurcation`] — sweeps over the solar constant assembling branch and
//!   fold data for bifurcation diagrams.
//!
//! All solvers work on the dimensionless form of the model; [`params`] owns
//! the scaling in both directions.

pub mod bifurcation;
pub mod bim;
pub mod error;
pub mod export;
pub mod fdm;
pub mod greenfn;
pub mod params;
pub mod quad;
pub mod stability;

pub use error::{EbmError, Result};
