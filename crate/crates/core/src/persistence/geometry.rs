use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, complement, RankedSvd};
use crate::symplectic::{half_dim, j_matrix, symplectic_defect, Mat, SymplecticMatrix};

/// `∠(E, S)`, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Finite(f64),
    Infinite,
}

impl Angle {
    pub fn value(self) -> f64 {
        match self {
            Angle::Finite(v) => v,
            Angle::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Angle::Finite(v) => write!(f, "{v}"),
            Angle::Infinite => write!(f, "inf"),
        }
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Angle::Finite(v) => s.serialize_f64(*v),
            Angle::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Angle::Finite(v)),
            Raw::Text(t) if t == "inf" => Ok(Angle::Infinite),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }
}

/// `‖L‖` below which the graph map counts as zero.
const ZERO_GRAPH: f64 = 1e-12;

/// `∠(E, S) = ‖L‖⁻¹` where `S = {v + Lv : v ∈ E^⊥}`; subspaces are given by spanning columns.
pub fn angle(e: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<Angle> {
    let n = e.nrows();
    if s.nrows() != n {
        return Err(Error::Dimension("subspaces live in different spaces".into()));
    }
    let qe = RankedSvd::new(e, 1e-12).range();
    let qs = RankedSvd::new(s, 1e-12).range();
    if qe.ncols() + qs.ncols() != n {
        return Err(Error::InvalidInput(format!(
            "dimensions {} + {} are not complementary in ℝ^{n}",
            qe.ncols(),
            qs.ncols()
        )));
    }
    let qperp = complement(&qe, n);
    let x = qperp.transpose() * &qs;
    let y = qe.transpose() * &qs;
    let sv = linalg::singular_values(&x);
    if sv.iter().copied().fold(f64::INFINITY, f64::min) < 1e-12 {
        return Err(Error::InvalidInput("subspaces intersect: not a direct sum".into()));
    }
    let xinv = x.try_inverse().ok_or_else(|| Error::InvalidInput("subspaces intersect: not a direct sum".into()))?;
    let l = y * xinv;
    let norm = if l.is_empty() { 0.0 } else { linalg::op_norm(&l) };
    Ok(if norm <= ZERO_GRAPH { Angle::Infinite } else { Angle::Finite(1.0 / norm) })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockCheck {
    /// `‖AᵀD − CᵀB − I‖_F`.
    pub identity_residual: f64,
    /// `‖BᵀD − DᵀB‖_F`.
    pub bd_asymmetry: f64,
    /// `‖AᵀC − CᵀA‖_F`.
    pub ac_asymmetry: f64,
    pub blocks_pass: bool,
    pub defect: f64,
    pub symplectic: bool,
    /// Block conditions and the defect test agree.
    pub consistent: bool,
}

/// The three block conditions for `S = [[A, B], [C, D]]` against `SᵀJS = J`.
pub fn symplectic_block_check(s: &Mat, tol: f64) -> Result<BlockCheck> {
    let m = half_dim(s)?;
    let a = s.view((0, 0), (m, m));
    let b = s.view((0, m), (m, m));
    let c = s.view((m, 0), (m, m));
    let d = s.view((m, m), (m, m));
    let identity_residual = (a.transpose() * d - c.transpose() * b - Mat::identity(m, m)).norm();
    let bd = b.transpose() * d;
    let ac = a.transpose() * c;
    let bd_asymmetry = (&bd - bd.transpose()).norm();
    let ac_asymmetry = (&ac - ac.transpose()).norm();
    let blocks_pass = identity_residual <= tol && bd_asymmetry <= tol && ac_asymmetry <= tol;
    let defect = symplectic_defect(s)?;
    let symplectic = defect <= tol;
    Ok(BlockCheck {
        identity_residual,
        bd_asymmetry,
        ac_asymmetry,
        blocks_pass,
        defect,
        symplectic,
        consistent: blocks_pass == symplectic,
    })
}

/// `S = U Y Uᵀ` with `U = [Q, −𝕁Q]` orthogonal symplectic and `Y = [[A, B], [0, D]]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Triangularization {
    pub u: Mat,
    pub y: Mat,
    pub a: Mat,
    pub b: Mat,
    pub d: Mat,
    pub lower_left: f64,
    /// `‖D − (Aᵀ)⁻¹‖_F`.
    pub inverse_transpose_residual: f64,
    pub reconstruction_residual: f64,
}

pub const LAGRANGIAN_TOL: f64 = 1e-9;

/// Orthonormal basis of a spanning set, checked to be Lagrangian.
pub fn lagrangian_basis(l: &DMatrix<f64>) -> Result<Mat> {
    let m = l.nrows() / 2;
    let q = RankedSvd::new(l, 1e-12).range();
    if q.ncols() != m || l.nrows() != 2 * m {
        return Err(Error::InvalidInput(format!("a Lagrangian subspace of ℝ^{} has dimension {m}, got {}", 2 * m, q.ncols())));
    }
    let omega = (q.transpose() * j_matrix(m) * &q).norm();
    if omega > LAGRANGIAN_TOL {
        return Err(Error::InvalidInput(format!("subspace is not Lagrangian (‖Qᵀ𝕁Q‖ = {omega:.3e})")));
    }
    Ok(q)
}

pub fn lagrangian_triangularize(s: &SymplecticMatrix, l: &DMatrix<f64>) -> Result<Triangularization> {
    let m = s.m();
    if l.nrows() != 2 * m {
        return Err(Error::Dimension("subspace and matrix dimensions differ".into()));
    }
    let q = lagrangian_basis(l)?;
    let leak = ((Mat::identity(2 * m, 2 * m) - &q * q.transpose()) * s.mat() * &q).norm() / s.mat().norm();
    if leak > LAGRANGIAN_TOL {
        return Err(Error::InvalidInput(format!("subspace is not invariant (leak {leak:.3e})")));
    }
    let jq = j_matrix(m) * &q;
    let mut u = Mat::zeros(2 * m, 2 * m);
    u.view_mut((0, 0), (2 * m, m)).copy_from(&q);
    u.view_mut((0, m), (2 * m, m)).copy_from(&(-jq));
    let y = u.transpose() * s.mat() * &u;
    let a = y.view((0, 0), (m, m)).into_owned();
    let b = y.view((0, m), (m, m)).into_owned();
    let d = y.view((m, m), (m, m)).into_owned();
    let lower_left = y.view((m, 0), (m, m)).norm();
    let a_inv_t = a.transpose().try_inverse().ok_or_else(|| Error::Verification("singular diagonal block".into()))?;
    Ok(Triangularization {
        inverse_transpose_residual: (&d - a_inv_t).norm(),
        reconstruction_residual: (&u * &y * u.transpose() - s.mat()).norm(),
        u,
        y,
        a,
        b,
        d,
        lower_left,
    })
}
