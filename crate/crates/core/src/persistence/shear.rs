use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{angle, Angle};
use super::sequence::{stable_unstable_split, HyperbolicStatus, PeriodicSymplecticSequence};
use crate::error::{Error, Result};
use crate::linalg::{self, RankedSvd};
use crate::symplectic::{j_matrix, Mat, SymplecticMatrix};

/// Eigenvalue-one residual accepted for the destabilised product.
pub const FIXED_VECTOR_TOL: f64 = 1e-8;
/// Relative slack on `‖C‖ ≤ 2∠(E_s, E_u)`.
pub const ANGLE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShearReport {
    /// Symmetric shear block in the adapted frame.
    pub c: Mat,
    pub c_norm: f64,
    /// `[𝕁Q, Q]` with `Q` an orthonormal basis of `E_s` at index 0.
    pub frame: Mat,
    /// `ψ₀ · V [[I, C], [0, I]] Vᵀ`.
    pub perturbed_first: Mat,
    /// `ξ₀ − ψ₀` in Frobenius norm.
    pub perturbation_size: f64,
    pub fixed_vector: Vec<f64>,
    /// `‖Π' z − z‖ / ‖z‖` for the perturbed period product.
    pub eigen_residual: f64,
    pub angle: Angle,
    /// `‖PA⁻¹‖⁻¹`.
    pub graph_inverse_norm: f64,
    pub angle_bound_holds: bool,
    pub pass: bool,
}

fn op_norm(a: &Mat) -> f64 {
    if a.is_empty() { 0.0 } else { linalg::op_norm(a) }
}

/// Symmetric `C` with `Cy = w` and `‖C‖ = ‖w‖/‖y‖`.
fn symmetric_map(y: &DVector<f64>, w: &DVector<f64>) -> Mat {
    let scale = w.norm() / y.norm();
    let yh = y / y.norm();
    let wh = w / w.norm();
    let diff = &yh - &wh;
    if diff.norm() < 1e-12 {
        return &yh * yh.transpose() * scale;
    }
    let u = &diff / diff.norm();
    (Mat::identity(y.len(), y.len()) - &u * u.transpose() * 2.0) * scale
}

/// Perturbs `ψ₀` by a symmetric shear so the period product acquires eigenvalue 1.
pub fn shear_destabilize(seq: &PeriodicSymplecticSequence) -> Result<ShearReport> {
    let (split, report) = stable_unstable_split(seq, 0)?;
    let split = split.ok_or_else(|| Error::NotApplicable(format!("sequence is not hyperbolic (gap {:.3e})", report.gap)))?;
    let m = seq.m();
    let q = &split.stable;
    let mut frame = Mat::zeros(2 * m, 2 * m);
    frame.view_mut((0, 0), (2 * m, m)).copy_from(&(j_matrix(m) * q));
    frame.view_mut((0, m), (2 * m, m)).copy_from(q);
    let prod = seq.product(0);
    let mf = frame.transpose() * &prod * &frame;
    let a = mf.view((0, 0), (m, m)).into_owned();
    let p = mf.view((m, 0), (m, m)).into_owned();
    let b = mf.view((m, m), (m, m)).into_owned();
    let id = Mat::identity(m, m);
    let a_inv = a.clone().try_inverse().ok_or_else(|| Error::Verification("singular expanding block".into()))?;
    let pa = &p * &a_inv;
    let pa_norm = op_norm(&pa);
    if pa_norm <= 1e-12 {
        return Err(Error::NotApplicable("stable and unstable bundles are orthogonal (infinite angle)".into()));
    }
    if op_norm(&(&id - &b)) > 2.0 {
        return Err(Error::NotApplicable("‖I − B‖ > 2 on the stable block".into()));
    }
    let svd = RankedSvd::new(&pa, 1e-12);
    let v: DVector<f64> = svd.v.column(0).into_owned() / pa_norm;
    let w = (&id - &a_inv) * &v;
    if w.norm() > 2.0 * v.norm() {
        return Err(Error::NotApplicable("‖(I − A⁻¹)v‖ > 2‖v‖".into()));
    }
    let i_minus_b_inv = (&id - &b).try_inverse().ok_or_else(|| Error::Verification("I − B is singular".into()))?;
    let y = -(i_minus_b_inv * &pa * &v);
    let c = symmetric_map(&y, &w);
    let mut shear = Mat::identity(2 * m, 2 * m);
    shear.view_mut((0, m), (m, m)).copy_from(&c);
    let psi0 = seq.map(0).mat();
    let perturbed_first = psi0 * &frame * shear * frame.transpose();
    let i_minus_a_inv = (&id - &a_inv).try_inverse().ok_or_else(|| Error::Verification("I − A⁻¹ is singular".into()))?;
    let x = -(i_minus_a_inv * &c * &y);
    let mut local = DVector::zeros(2 * m);
    local.rows_mut(0, m).copy_from(&x);
    local.rows_mut(m, m).copy_from(&y);
    let z = &frame * local;
    let perturbed = seq.with_map(0, SymplecticMatrix::new_unchecked(perturbed_first.clone())?)?;
    let eigen_residual = (perturbed.product(0) * &z - &z).norm() / z.norm();
    let ang = angle(&split.stable, &split.unstable)?;
    let c_norm = op_norm(&c);
    let angle_bound_holds = c_norm <= 2.0 * ang.value() * (1.0 + ANGLE_SLACK);
    Ok(ShearReport {
        perturbation_size: (&perturbed_first - psi0).norm(),
        c,
        c_norm,
        frame,
        perturbed_first,
        fixed_vector: z.iter().copied().collect(),
        pass: eigen_residual <= FIXED_VECTOR_TOL && angle_bound_holds,
        eigen_residual,
        angle: ang,
        graph_inverse_norm: 1.0 / pa_norm,
        angle_bound_holds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformityReport {
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub base_gap: f64,
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub hyperbolic_fraction: f64,
    /// Every sampled perturbation stayed hyperbolic.
    pub persistent: bool,
}

fn random_symmetric(m: usize, rng: &mut ChaCha8Rng) -> Mat {
    let r = Mat::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let s = &r + r.transpose();
    let n = op_norm(&s);
    if n == 0.0 { Mat::identity(m, m) } else { s / n }
}

/// Random shear of operator norm `ε` on the `C` block, upper or lower with equal odds.
fn random_shear(m: usize, epsilon: f64, rng: &mut ChaCha8Rng) -> Mat {
    let c = random_symmetric(m, rng) * epsilon;
    let mut s = Mat::identity(2 * m, 2 * m);
    if rng.random_bool(0.5) {
        s.view_mut((0, m), (m, m)).copy_from(&c);
    } else {
        s.view_mut((m, 0), (m, m)).copy_from(&c);
    }
    s
}

/// Samples `ψ_j ↦ ψ_j·Sh_j` with random symmetric shears of size `ε` and records the spectral gap.
pub fn uniformity_probe(seq: &PeriodicSymplecticSequence, epsilon: f64, samples: usize, seed: u64) -> Result<UniformityReport> {
    if !(epsilon >= 0.0) || samples == 0 {
        return Err(Error::InvalidInput("need ε ≥ 0 and at least one sample".into()));
    }
    let (_, base) = stable_unstable_split(seq, 0)?;
    let m = seq.m();
    let results: Vec<(f64, bool)> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let maps = seq
                .maps()
                .iter()
                .map(|psi| SymplecticMatrix::new_unchecked(psi.mat() * random_shear(m, epsilon, &mut rng)))
                .collect::<Result<Vec<_>>>()?;
            let (_, rep) = stable_unstable_split(&PeriodicSymplecticSequence::from_symplectic(maps)?, 0)?;
            Ok((rep.gap, rep.status == HyperbolicStatus::Hyperbolic))
        })
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = results.iter().map(|r| r.0).collect();
    let hyperbolic = results.iter().filter(|r| r.1).count();
    Ok(UniformityReport {
        epsilon,
        samples,
        seed,
        base_gap: base.gap,
        min_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        hyperbolic_fraction: hyperbolic as f64 / samples as f64,
        persistent: hyperbolic == samples,
        gaps,
    })
}
