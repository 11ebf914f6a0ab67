//! Bilinear control systems on Sp(m) and the End-Point mapping calculus.

pub mod brackets;
pub mod certificate;
pub mod differential;
pub mod drift;
pub(crate) mod fpoly;
pub mod grid;
pub mod propagate;
pub mod qdelta;
pub mod signal;
pub mod spline;
pub mod system;

pub use brackets::{bracket_identity_residual, bracket_sequence, BracketSequence, DEFAULT_J_MAX};
pub use certificate::{
    annihilator_basis, first_order_certificate, second_order_certificate, AnnihilatorBasis, FirstOrderReport, ProbeSpace,
    SecondOrderReport,
};
pub use differential::{directional_hessians, first_differential, second_differential, second_differential_at};
pub use drift::{ConstantDrift, Drift, SampledDrift};
pub use grid::TimeGrid;
pub use propagate::{basis_jacobian, end_point, propagate_controlled, propagate_fundamental, FundamentalSolution, Trajectory};
pub use qdelta::{kernel_coefficients, qdelta_form, qdelta_gap, qdelta_with, KernelCoefficients};
pub use signal::{ControlBasis, ControlNorms, ControlSignal};
pub use spline::CubicSpline;
pub use system::BilinearSystem;
