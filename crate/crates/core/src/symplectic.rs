//! Primitives on the symplectic group Sp(m) ⊂ M_{2m}(ℝ).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

pub type Mat = DMatrix<f64>;

/// Default band for `‖XᵀJX − J‖_F`.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Half-dimension `m` of an even square matrix.
pub fn half_dim(x: &Mat) -> Result<usize> {
    let (r, c) = x.shape();
    if r != c {
        return Err(Error::Dimension(format!("expected a square matrix, got {r}×{c}")));
    }
    if r == 0 || r % 2 != 0 {
        return Err(Error::Dimension(format!("expected even dimension ≥ 2, got {r}")));
    }
    Ok(r / 2)
}

fn same_shape(a: &Mat, b: &Mat) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::Dimension(format!("shape mismatch {:?} vs {:?}", a.shape(), b.shape())));
    }
    Ok(())
}

/// `J = [[0, I], [−I, 0]]`.
pub fn j_matrix(m: usize) -> Mat {
    let mut j = Mat::zeros(2 * m, 2 * m);
    for i in 0..m {
        j[(i, m + i)] = 1.0;
        j[(m + i, i)] = -1.0;
    }
    j
}

/// `‖XᵀJX − J‖_F`.
pub fn symplectic_defect(x: &Mat) -> Result<f64> {
    let m = half_dim(x)?;
    let j = j_matrix(m);
    Ok((x.transpose() * &j * x - j).norm())
}

/// `[B, B′] = BB′ − B′B`.
pub fn lie_bracket(b: &Mat, b2: &Mat) -> Result<Mat> {
    same_shape(b, b2)?;
    Ok(b * b2 - b2 * b)
}

/// `⟨P, Q⟩ = tr(PᵀQ)`.
pub fn frobenius_inner(p: &Mat, q: &Mat) -> Result<f64> {
    same_shape(p, q)?;
    Ok(p.dot(q))
}

/// `‖JH − (JH)ᵀ‖_F`; zero exactly for Hamiltonian `H`.
pub fn hamiltonian_asymmetry(h: &Mat) -> Result<f64> {
    let m = half_dim(h)?;
    let jh = j_matrix(m) * h;
    Ok((&jh - jh.transpose()).norm())
}

/// `exp(tH)` for Hamiltonian `H` (scaling and squaring with Padé approximants).
pub fn hamiltonian_exp(h: &Mat, t: f64, tol: f64) -> Result<SymplecticMatrix> {
    let asym = hamiltonian_asymmetry(h)?;
    if asym > tol * (1.0 + h.norm()) {
        return Err(Error::NotHamiltonian(asym));
    }
    let x = (h * t).exp();
    SymplecticMatrix::new(x, tol)
}

/// Orthonormal (Frobenius) basis of the Lie algebra sp(m) = {Y : JY symmetric}.
pub fn sp_basis(m: usize) -> Vec<Mat> {
    let n = 2 * m;
    let minus_j = -j_matrix(m);
    let mut out = Vec::with_capacity(m * (2 * m + 1));
    for k in 0..n {
        for l in k..n {
            let mut s = Mat::zeros(n, n);
            if k == l {
                s[(k, k)] = 1.0;
            } else {
                s[(k, l)] = std::f64::consts::FRAC_1_SQRT_2;
                s[(l, k)] = std::f64::consts::FRAC_1_SQRT_2;
            }
            out.push(&minus_j * s);
        }
    }
    out
}

/// Random Hamiltonian matrix with unit Frobenius norm.
pub fn random_hamiltonian<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Mat {
    let basis = sp_basis(m);
    let mut h = Mat::zeros(2 * m, 2 * m);
    for b in &basis {
        h += b * rng.random_range(-1.0..1.0);
    }
    let n = h.norm();
    if n == 0.0 {
        basis[0].clone()
    } else {
        h / n
    }
}

/// A matrix certified symplectic up to a recorded defect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticMatrix {
    mat: Mat,
    defect: f64,
}

impl SymplecticMatrix {
    pub fn new(mat: Mat, tol: f64) -> Result<Self> {
        let defect = symplectic_defect(&mat)?;
        if !(defect <= tol) {
            return Err(Error::NotSymplectic { defect, tol });
        }
        Ok(Self { mat, defect })
    }

    /// Wrap without the tolerance check; the defect is still measured.
    pub fn new_unchecked(mat: Mat) -> Result<Self> {
        let defect = symplectic_defect(&mat)?;
        Ok(Self { mat, defect })
    }

    pub fn identity(m: usize) -> Self {
        Self { mat: Mat::identity(2 * m, 2 * m), defect: 0.0 }
    }

    pub fn j(m: usize) -> Self {
        Self { mat: j_matrix(m), defect: 0.0 }
    }

    pub fn m(&self) -> usize {
        self.mat.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn into_mat(self) -> Mat {
        self.mat
    }

    pub fn defect(&self) -> f64 {
        self.defect
    }

    /// `X⁻¹ = −J Xᵀ J`, exact on Sp(m).
    pub fn inverse(&self) -> Mat {
        let j = j_matrix(self.m());
        -(&j * self.mat.transpose() * &j)
    }

    pub fn mul(&self, other: &SymplecticMatrix) -> Result<SymplecticMatrix> {
        same_shape(&self.mat, &other.mat)?;
        SymplecticMatrix::new_unchecked(&self.mat * &other.mat)
    }

    pub fn distance(&self, other: &Mat) -> f64 {
        (&self.mat - other).norm()
    }
}

/// A tangent vector `base ∈ T_anchor Sp(m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymplecticTangent {
    pub base: Mat,
    pub anchor: SymplecticMatrix,
}

impl SymplecticTangent {
    /// `‖J·(base·anchor⁻¹) − (…)ᵀ‖`, zero on the tangent space.
    pub fn tangency_defect(&self) -> f64 {
        hamiltonian_asymmetry(&(&self.base * self.anchor.inverse())).unwrap_or(f64::INFINITY)
    }
}

/// Orthonormal frame of `T_anchor Sp(m) = {H·anchor : JH symmetric}`.
#[derive(Debug, Clone)]
pub struct TangentFrame {
    anchor: SymplecticMatrix,
    /// Columns are the flattened (row-major) frame vectors.
    columns: DMatrix<f64>,
}

impl TangentFrame {
    pub fn new(anchor: &SymplecticMatrix) -> Self {
        let m = anchor.m();
        let raw: Vec<DVector<f64>> =
            sp_basis(m).iter().map(|h| linalg::flatten(&(h * anchor.mat()))).collect();
        let columns = linalg::orthonormalize(&DMatrix::from_columns(&raw));
        debug_assert_eq!(columns.ncols(), m * (2 * m + 1));
        Self { anchor: anchor.clone(), columns }
    }

    pub fn anchor(&self) -> &SymplecticMatrix {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.columns.ncols()
    }

    /// Coordinates of the orthogonal projection of `x`.
    pub fn coords(&self, x: &Mat) -> DVector<f64> {
        self.columns.transpose() * linalg::flatten(x)
    }

    pub fn from_coords(&self, z: &DVector<f64>) -> Mat {
        linalg::unflatten(&(&self.columns * z), self.anchor.dim())
    }

    pub fn project(&self, x: &Mat) -> Mat {
        self.from_coords(&self.coords(x))
    }

    /// Frame vector `i` as a matrix.
    pub fn vector(&self, i: usize) -> Mat {
        linalg::unflatten(&self.columns.column(i).into_owned(), self.anchor.dim())
    }
}

/// Frobenius-orthogonal projection of `m` onto `T_anchor Sp(m)`.
pub fn tangent_projection(m: &Mat, anchor: &SymplecticMatrix) -> Result<SymplecticTangent> {
    same_shape(m, anchor.mat())?;
    let n = anchor.dim();
    let is_orthogonal = (anchor.mat().transpose() * anchor.mat() - Mat::identity(n, n)).norm() < 1e-14;
    let base = if is_orthogonal {
        // Right translation by an orthogonal matrix is an isometry.
        let j = j_matrix(anchor.m());
        let y = m * anchor.mat().transpose();
        let jy = &j * y;
        let sym = (&jy + jy.transpose()) * 0.5;
        -(&j * sym) * anchor.mat()
    } else {
        TangentFrame::new(anchor).project(m)
    };
    Ok(SymplecticTangent { base, anchor: anchor.clone() })
}

/// Pull a drifted matrix back towards Sp(m) by the first-order retraction
/// `X ← X(I + ½ J D)`, `D = XᵀJX − J`, iterated until the defect stalls.
pub fn resymplectify(x: &Mat) -> Result<Mat> {
    let m = half_dim(x)?;
    let j = j_matrix(m);
    let id = Mat::identity(2 * m, 2 * m);
    let mut y = x.clone();
    let mut best = symplectic_defect(&y)?;
    for _ in 0..20 {
        let d = y.transpose() * &j * &y - &j;
        let cand = &y * (&id + &j * d * 0.5);
        let defect = symplectic_defect(&cand)?;
        if defect >= best {
            break;
        }
        y = cand;
        best = defect;
        if best < 1e-15 {
            break;
        }
    }
    Ok(y)
}
