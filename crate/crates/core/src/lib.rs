//! Second-order controllability on the symplectic group.
//!
//! The crate is organised bottom-up:
//!
//! * [`symplectic`]: Sp(m) primitives such as the 𝕁 matrix, defects, brackets, tangent projections.
//! * [`control`]: bilinear systems `Ẋ = A(t)X + Σ uᵢ(t) Bᵢ X`: propagation, End-Point
//!   differentials, bracket hierarchies and certificates.
//! * [`steering`]: local inversion of the End-Point map, including corank-deficient targets.
//! * [`geodesic`]: the Jacobi-equation control system and its closed-form brackets.
//! * [`franks`]: conformal bump synthesis realising a prescribed Poincaré map.
//! * [`appendix`]: exact rational ⊙-calculus and the polynomial certificates.
//! * [`persistence`]: hyperbolicity, dominated splittings, angles and shear perturbations.
//! * [`io`]: JSON / CSV / TOML formats shared with the CLI.

pub mod appendix;
pub mod control;
pub mod error;
pub mod franks;
pub mod geodesic;
pub mod io;
pub mod linalg;
pub mod persistence;
pub mod quadrature;
pub mod steering;
pub mod symplectic;

pub use error::{Error, Result};
pub use symplectic::{Mat, SymplecticMatrix, SymplecticTangent};
