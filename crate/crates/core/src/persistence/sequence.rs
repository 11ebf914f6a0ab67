use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RankedSvd};
use crate::symplectic::{j_matrix, Mat, SymplecticMatrix};

/// Default half-width of the band around the unit circle.
pub const GAP_TOL: f64 = 1e-6;
/// Gaps below this are numerically on the circle (defective unit eigenvalues land near √ε).
const ON_CIRCLE: f64 = 1.5e-7;
const REFINE_STEPS: usize = 200;

/// `ψ₀ … ψ_{n₀−1}`, extended periodically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeriodicSymplecticSequence {
    maps: Vec<SymplecticMatrix>,
}

impl PeriodicSymplecticSequence {
    pub fn new(maps: Vec<Mat>, tol: f64) -> Result<Self> {
        let maps = maps.into_iter().map(|m| SymplecticMatrix::new(m, tol)).collect::<Result<Vec<_>>>()?;
        Self::from_symplectic(maps)
    }

    pub fn from_symplectic(maps: Vec<SymplecticMatrix>) -> Result<Self> {
        let dim = maps.first().ok_or_else(|| Error::InvalidInput("empty sequence".into()))?.dim();
        if maps.iter().any(|m| m.dim() != dim) {
            return Err(Error::Dimension("maps of differing dimension".into()));
        }
        Ok(Self { maps })
    }

    pub fn period(&self) -> usize {
        self.maps.len()
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn m(&self) -> usize {
        self.maps[0].m()
    }

    pub fn maps(&self) -> &[SymplecticMatrix] {
        &self.maps
    }

    /// `ψ_j` with periodic indexing.
    pub fn map(&self, j: usize) -> &SymplecticMatrix {
        &self.maps[j % self.period()]
    }

    /// `ψ_{j+len−1} ⋯ ψ_j`.
    pub fn block(&self, j: usize, len: usize) -> Mat {
        let n = self.dim();
        (0..len).fold(Mat::identity(n, n), |acc, i| self.map(j + i).mat() * acc)
    }

    /// Period product based at `j`.
    pub fn product(&self, j: usize) -> Mat {
        self.block(j, self.period())
    }

    /// Copy with `ψ_j` replaced.
    pub fn with_map(&self, j: usize, map: SymplecticMatrix) -> Result<Self> {
        let mut maps = self.maps.clone();
        let n = self.period();
        maps[j % n] = map;
        Self::from_symplectic(maps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperbolicStatus {
    Hyperbolic,
    /// Within the tolerance band but not numerically on the circle.
    Marginal,
    NonHyperbolic,
}

/// Orthonormal bases of `E_s` and `E_u` at one index.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Splitting {
    pub index: usize,
    pub stable: DMatrix<f64>,
    pub unstable: DMatrix<f64>,
    /// `‖(I − QQᵀ) M Q‖` for each subspace.
    pub invariance_residual: f64,
    /// `‖Qᵀ𝕁Q‖` for each subspace.
    pub lagrangian_residual: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    /// `(re, im)` of the period-product eigenvalues.
    pub eigenvalues: Vec<(f64, f64)>,
    pub moduli: Vec<f64>,
    /// `min |log |λ||`.
    pub gap: f64,
    pub status: HyperbolicStatus,
    pub hyperbolic: bool,
    /// `max |λ_i λ_{n−1−i}| − 1` over moduli sorted ascending.
    pub pairing_residual: f64,
    /// `‖ψ_j‖` for each map.
    pub map_norms: Vec<f64>,
}

fn orthonormal_range(p: &Mat, expected: usize) -> Result<Mat> {
    let svd = RankedSvd::new(p, 1e-8);
    if svd.rank != expected {
        return Err(Error::Verification(format!("spectral projector has rank {} instead of {expected}", svd.rank)));
    }
    Ok(svd.range())
}

/// Projector onto the eigenspaces inside the unit disk: the sign of the Cayley transform
/// `(I − M)⁻¹(I + M)`, by scaled Newton iteration.
fn stable_projector(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    let id = Mat::identity(n, n);
    let mut x = (&id - m)
        .try_inverse()
        .ok_or_else(|| Error::NotApplicable("eigenvalue 1 on the unit circle".into()))?
        * (&id + m);
    for _ in 0..100 {
        let inv = x.clone().try_inverse().ok_or_else(|| Error::NotApplicable("eigenvalue −1 on the unit circle".into()))?;
        let scale = (inv.norm() / x.norm()).sqrt();
        let next = (&x * scale + &inv / scale) * 0.5;
        let change = (&next - &x).norm() / next.norm();
        x = next;
        if change < 1e-15 {
            break;
        }
    }
    Ok((&id + x) * 0.5)
}

/// Orthogonal iteration with `step`, keeping the iterate with the smallest invariance residual under `m`.
fn refine_dominant(step: &Mat, m: &Mat, q: Mat) -> Mat {
    let mut best_res = subspace_residuals(m, &q).0;
    let mut best = q.clone();
    let mut q = q;
    for _ in 0..REFINE_STEPS {
        if best_res < 1e-15 {
            break;
        }
        q = (step * &q).qr().q();
        let res = subspace_residuals(m, &q).0;
        if res < best_res {
            best_res = res;
            best = q.clone();
        }
    }
    best
}

fn subspace_residuals(m: &Mat, q: &Mat) -> (f64, f64) {
    let n = m.nrows();
    let proj = Mat::identity(n, n) - q * q.transpose();
    let inv = (proj * m * q).norm() / m.norm();
    let lag = (q.transpose() * j_matrix(n / 2) * q).norm();
    (inv, lag)
}

/// Eigen-analysis of the period product at `j` and, when hyperbolic, its splitting.
pub fn stable_unstable_split(seq: &PeriodicSymplecticSequence, j: usize) -> Result<(Option<Splitting>, HyperbolicityReport)> {
    stable_unstable_split_with(seq, j, GAP_TOL)
}

pub fn stable_unstable_split_with(
    seq: &PeriodicSymplecticSequence,
    j: usize,
    gap_tol: f64,
) -> Result<(Option<Splitting>, HyperbolicityReport)> {
    let prod = seq.product(j);
    let eig: Vec<Complex<f64>> = prod.complex_eigenvalues().iter().copied().collect();
    let mut moduli: Vec<f64> = eig.iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let gap = moduli.iter().map(|r| r.ln().abs()).fold(f64::INFINITY, f64::min);
    let n = moduli.len();
    let pairing_residual = (0..n).map(|i| (moduli[i] * moduli[n - 1 - i] - 1.0).abs()).fold(0.0, f64::max);
    let status = if gap > gap_tol {
        HyperbolicStatus::Hyperbolic
    } else if gap > ON_CIRCLE {
        HyperbolicStatus::Marginal
    } else {
        HyperbolicStatus::NonHyperbolic
    };
    let report = HyperbolicityReport {
        eigenvalues: eig.iter().map(|z| (z.re, z.im)).collect(),
        moduli,
        gap,
        status,
        hyperbolic: status == HyperbolicStatus::Hyperbolic,
        pairing_residual,
        map_norms: seq.maps().iter().map(|m| linalg::op_norm(m.mat())).collect(),
    };
    if !report.hyperbolic {
        return Ok((None, report));
    }
    let m = seq.m();
    let ps = stable_projector(&prod)?;
    let stable = orthonormal_range(&ps, m)?;
    let unstable = orthonormal_range(&(Mat::identity(2 * m, 2 * m) - ps), m)?;
    let prod_inv = j_matrix(m).transpose() * prod.transpose() * j_matrix(m);
    let stable = refine_dominant(&prod_inv, &prod, stable);
    let unstable = refine_dominant(&prod, &prod, unstable);
    let (is, ls) = subspace_residuals(&prod, &stable);
    let (iu, lu) = subspace_residuals(&prod, &unstable);
    let split = Splitting {
        index: j % seq.period(),
        stable,
        unstable,
        invariance_residual: is.max(iu),
        lagrangian_residual: ls.max(lu),
    };
    Ok((Some(split), report))
}

/// Splittings at every index of one period; errors if the sequence is not hyperbolic.
pub fn splittings_along_orbit(seq: &PeriodicSymplecticSequence) -> Result<Vec<Splitting>> {
    (0..seq.period())
        .map(|j| {
            let (split, report) = stable_unstable_split(seq, j)?;
            split.ok_or_else(|| Error::NotApplicable(format!("sequence is not hyperbolic (gap {:.3e})", report.gap)))
        })
        .collect()
}

/// Operator norm of `M` restricted to the span of the orthonormal columns `q`.
pub fn restricted_norm(m: &Mat, q: &Mat) -> f64 {
    linalg::op_norm(&(m * q))
}
