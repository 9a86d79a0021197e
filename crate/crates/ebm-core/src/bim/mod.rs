//! Stationary solutions of the energy balance equation through boundary
//! integral equations: case catalogue, system assembly, Newton root search
//! for the critical latitudes, and multi-start enumeration of coexisting
//! equilibria.

mod case;
mod enumerate;
mod newton;
mod system;

pub use case::{cases_for, CaseSpec, EdgeId, LandmarkKind, Region, RightEnd, SourceBranch, MIN_SEP};
pub use enumerate::{enumerate_equilibria, EnumerateOpts, WarmSeeds};
pub use newton::{jacobian, newton_find, NewtonOpts, NewtonOutcome};
pub use system::{
    Assembled, BieSystem, BoundaryUnknowns, LandmarkValue, RegionIntegrals, StationarySolution,
};
