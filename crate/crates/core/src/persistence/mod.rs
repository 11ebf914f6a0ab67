//! Periodic symplectic sequences: hyperbolic splittings, domination, angles and shear perturbations.

mod dominated;
mod geometry;
mod sequence;
mod shear;

pub use dominated::{domination_check, mane_exponents, smallest_dominating_block, DominationReport, ManeMember, ManeReport, MAX_BLOCK};
pub use geometry::{
    angle, lagrangian_basis, lagrangian_triangularize, symplectic_block_check, Angle, BlockCheck, Triangularization, LAGRANGIAN_TOL,
};
pub use sequence::{
    restricted_norm, splittings_along_orbit, stable_unstable_split, stable_unstable_split_with, HyperbolicStatus,
    HyperbolicityReport, PeriodicSymplecticSequence, Splitting, GAP_TOL,
};
pub use shear::{shear_destabilize, uniformity_probe, ShearReport, UniformityReport, ANGLE_SLACK, FIXED_VECTOR_TOL};
