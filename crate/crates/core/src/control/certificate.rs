use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::brackets::{bracket_sequence, max_depth, BracketSequence};
use super::grid::TimeGrid;
use super::propagate::{basis_jacobian, propagate_fundamental};
use super::signal::ControlBasis;
use super::system::BilinearSystem;
use crate::error::Result;
use crate::linalg::{self, RankedSvd, REL_RANK_TOL};
use crate::symplectic::{Mat, SymplecticMatrix, SymplecticTangent, TangentFrame};

/// Residual bound for the membership condition (2.10).
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Residual bound for the trace identities an annihilator must satisfy.
pub const ANNIHILATOR_IDENTITY_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FirstOrderReport {
    pub satisfied: bool,
    pub witness_time: Option<f64>,
    /// Largest rank seen over the scanned nodes.
    pub rank: usize,
    pub expected: usize,
    pub j_max: usize,
    #[serde(skip)]
    pub span_basis: Vec<Mat>,
}

fn flattened(mats: &[&Mat]) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = mats.iter().map(|m| linalg::flatten(m)).collect();
    if cols.is_empty() {
        DMatrix::zeros(0, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

fn effective_depth(sys: &BilinearSystem, j_max: usize) -> usize {
    max_depth(sys).map_or(j_max, |d| j_max.min(d))
}

/// Scans grid nodes for `rank{B_i^j(t)} = m(2m+1)`; stops at the first witness.
pub fn first_order_certificate(sys: &BilinearSystem, grid: &TimeGrid, j_max: usize) -> Result<FirstOrderReport> {
    let j_max = effective_depth(sys, j_max);
    let expected = sys.m() * (2 * sys.m() + 1);
    let mut best = 0;
    let mut best_basis = Vec::new();
    for t in grid.nodes() {
        let seq = bracket_sequence(sys, &[t], j_max)?;
        let mats = seq.at_time(0);
        let flat = flattened(&mats);
        let svd = RankedSvd::new(&flat, REL_RANK_TOL);
        if svd.rank > best || best_basis.is_empty() {
            best = svd.rank.max(best);
            best_basis = (0..svd.rank).map(|c| linalg::unflatten(&svd.u.column(c).into_owned(), sys.dim())).collect();
        }
        if svd.rank == expected {
            return Ok(FirstOrderReport { satisfied: true, witness_time: Some(t), rank: expected, expected, j_max, span_basis: best_basis });
        }
    }
    Ok(FirstOrderReport { satisfied: false, witness_time: None, rank: best, expected, j_max, span_basis: best_basis })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SecondOrderReport {
    /// `BᵢBⱼ = 0` exactly for all pairs.
    pub products_zero: bool,
    /// Relative least-squares residuals of `[B_i^j(t̄), Bᵢ]`, j = 1, 2, against the bracket span.
    pub membership_residuals: Vec<f64>,
    pub membership_ok: bool,
    pub span_rank: usize,
    pub expected: usize,
    pub witness_time: f64,
    pub satisfied: bool,
}

/// Conditions (2.8), (2.10) and (2.11) at `t̄`.
pub fn second_order_certificate(sys: &BilinearSystem, t_bar: f64, j_max: usize) -> Result<SecondOrderReport> {
    let j_max = effective_depth(sys, j_max.max(2));
    let gens = sys.generators();
    let products_zero = gens.iter().all(|a| gens.iter().all(|b| (a * b).iter().all(|v| *v == 0.0)));
    let seq: BracketSequence = bracket_sequence(sys, &[t_bar], j_max)?;
    let span = flattened(&seq.at_time(0));
    let mut membership_residuals = Vec::new();
    for (i, b) in gens.iter().enumerate() {
        for j in 1..=2.min(j_max) {
            let bij = seq.get(0, i, j);
            let c = bij * b - b * bij;
            membership_residuals.push(linalg::relative_span_residual(&span, &linalg::flatten(&c)));
        }
    }
    let membership_ok = membership_residuals.iter().all(|r| *r <= MEMBERSHIP_TOL);
    let mut family: Vec<Mat> = seq.at_time(0).into_iter().cloned().collect();
    for i in 0..gens.len() {
        for l in 0..gens.len() {
            if i != l {
                let (a, b) = (seq.get(0, i, 1), seq.get(0, l, 1));
                family.push(a * b - b * a);
            }
        }
    }
    let span_rank = linalg::rank(&flattened(&family.iter().collect::<Vec<_>>()), REL_RANK_TOL);
    let expected = sys.m() * (2 * sys.m() + 1);
    Ok(SecondOrderReport {
        products_zero,
        membership_residuals,
        membership_ok,
        span_rank,
        expected,
        witness_time: t_bar,
        satisfied: products_zero && membership_ok && span_rank == expected,
    })
}

/// Directions whose End-Point image is sampled to find the annihilator.
#[derive(Debug, Clone)]
pub enum ProbeSpace {
    /// `D₀E(φ_b)` for every basis element.
    Basis(Arc<ControlBasis>),
    /// `S(T)·B_i^j(0)` for `j ≤ j_max`: the leading Taylor directions of the image near t = 0.
    Brackets { j_max: usize },
}

#[derive(Debug, Clone)]
pub struct AnnihilatorBasis {
    pub vectors: Vec<SymplecticTangent>,
    pub corank: usize,
    pub probe_rank: usize,
    /// `max |tr(PᵀS(T)S(t)⁻¹BᵢS(t))| / (‖P‖·‖S(T)S(t)⁻¹BᵢS(t)‖)` over nodes and channels.
    pub identity_residual: f64,
    pub identities_hold: bool,
}

/// Orthonormal annihilator of the probe image inside `T_{S(T)}Sp(m)`.
pub fn annihilator_basis(sys: &BilinearSystem, grid: &TimeGrid, probe: &ProbeSpace) -> Result<AnnihilatorBasis> {
    let fs = propagate_fundamental(sys, grid)?;
    let st = fs.final_state().clone();
    let frame = TangentFrame::new(&st);
    let image: Vec<DVector<f64>> = match probe {
        ProbeSpace::Basis(basis) => {
            let (_, jac) = basis_jacobian(sys, basis, &DVector::zeros(basis.len()), &SymplecticMatrix::identity(sys.m()), grid)?;
            jac.iter().map(|d| frame.coords(d)).collect()
        }
        ProbeSpace::Brackets { j_max } => {
            let seq = bracket_sequence(sys, &[0.0], *j_max)?;
            seq.at_time(0).into_iter().map(|b| frame.coords(&(st.mat() * b))).collect()
        }
    };
    let d = frame.dim();
    let jmat = if image.is_empty() { DMatrix::zeros(d, 0) } else { DMatrix::from_columns(&image) };
    let svd = RankedSvd::new(&jmat, REL_RANK_TOL);
    let left = if jmat.ncols() == 0 { DMatrix::identity(d, d) } else { svd.left_null() };
    let vectors: Vec<SymplecticTangent> = left
        .column_iter()
        .map(|c| SymplecticTangent { base: frame.from_coords(&c.into_owned()), anchor: st.clone() })
        .collect();
    let mut identity_residual: f64 = 0.0;
    for p in &vectors {
        let pn = p.base.norm();
        for (inv, s) in fs.inverses.iter().zip(&fs.samples) {
            for b in sys.generators() {
                let img = st.mat() * inv * b * s.mat();
                let scale = pn * img.norm();
                if scale > 0.0 {
                    identity_residual = identity_residual.max(p.base.dot(&img).abs() / scale);
                }
            }
        }
    }
    Ok(AnnihilatorBasis {
        corank: vectors.len(),
        probe_rank: if jmat.ncols() == 0 { 0 } else { svd.rank },
        identities_hold: identity_residual <= ANNIHILATOR_IDENTITY_TOL,
        identity_residual,
        vectors,
    })
}
