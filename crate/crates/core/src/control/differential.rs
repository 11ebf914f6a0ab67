use nalgebra::{DMatrix, DVector};

use super::grid::TimeGrid;
use super::propagate::{propagate_controlled, rk4};
use super::signal::{ControlBasis, ControlSignal};
use super::system::BilinearSystem;
use crate::error::{Error, Result};
use crate::symplectic::{Mat, SymplecticMatrix, SymplecticTangent};

/// `D_ū E(v) = X(T) ∫₀ᵀ Σ vᵢ(t) X(t)⁻¹ Bᵢ X(t) dt` by Simpson quadrature on the grid nodes,
/// where `X` is the trajectory driven by `ū` from `X0`.
pub fn first_differential(
    sys: &BilinearSystem,
    ubar: &ControlSignal,
    x0: &SymplecticMatrix,
    grid: &TimeGrid,
    v: &ControlSignal,
) -> Result<SymplecticTangent> {
    if v.k() != sys.k() {
        return Err(Error::Dimension(format!("direction has {} channels, system has {}", v.k(), sys.k())));
    }
    let traj = propagate_controlled(sys, ubar, x0, grid)?;
    let weights = grid.simpson_weights();
    let n = sys.dim();
    let mut acc = Mat::zeros(n, n);
    for ((x, t), w) in traj.states.iter().zip(&traj.times).zip(&weights) {
        let vt = v.value(*t);
        if vt.iter().all(|c| *c == 0.0) {
            continue;
        }
        let inv = x.clone().try_inverse().ok_or_else(|| Error::IntegrationAccuracy { defect: f64::INFINITY, time: *t })?;
        acc += inv * sys.control_matrix(vt.as_slice()) * x * *w;
    }
    let xt = traj.final_state()?;
    Ok(SymplecticTangent { base: xt.mat() * acc, anchor: xt })
}

/// `D₀²E(u) = 2Z(T)` where `Ṡ = AS`, `Ẏ = AY + Σuᵢ BᵢS`, `Ż = AZ + Σuᵢ BᵢY`, all started
/// at `(X0, 0, 0)`.
pub fn second_differential(sys: &BilinearSystem, x0: &SymplecticMatrix, grid: &TimeGrid, u: &ControlSignal) -> Result<Mat> {
    if u.k() != sys.k() {
        return Err(Error::Dimension(format!("control has {} channels, system has {}", u.k(), sys.k())));
    }
    let n = sys.dim();
    let rhs = |t: f64, tc: f64, y: &[Mat]| {
        let a = sys.drift().at(t);
        let w = sys.control_matrix(u.value(tc).as_slice());
        vec![&a * &y[0], &a * &y[1] + &w * &y[0], &a * &y[2] + &w * &y[1]]
    };
    let y = rk4(grid, vec![x0.mat().clone(), Mat::zeros(n, n), Mat::zeros(n, n)], rhs, |_, _| {});
    Ok(&y[2] * 2.0)
}

/// [`second_differential`] at an explicit base control; only `ū = 0` is supported.
pub fn second_differential_at(
    sys: &BilinearSystem,
    ubar: &ControlSignal,
    x0: &SymplecticMatrix,
    grid: &TimeGrid,
    u: &ControlSignal,
) -> Result<Mat> {
    if !ubar.is_zero() {
        return Err(Error::UnsupportedBasepoint("the second differential is only available at ū = 0".into()));
    }
    second_differential(sys, x0, grid, u)
}

/// Second derivatives of the discrete End-Point map along pairs of basis directions.
///
/// `directions` holds coefficient vectors (columns); for every pairing matrix `P_a` the
/// returned `H_a` satisfies `⟨P_a, E(λ + Nw)⟩ = … + ½ wᵀ H_a w + O(|w|³)`.
pub fn directional_hessians(
    sys: &BilinearSystem,
    basis: &ControlBasis,
    base: &DVector<f64>,
    x0: &SymplecticMatrix,
    grid: &TimeGrid,
    directions: &DMatrix<f64>,
    pairings: &[Mat],
) -> Result<Vec<DMatrix<f64>>> {
    if directions.nrows() != basis.len() || base.len() != basis.len() || basis.channels() != sys.k() {
        return Err(Error::Dimension("directions do not match the basis".into()));
    }
    let kdim = directions.ncols();
    let n = sys.dim();
    let pairs: Vec<(usize, usize)> = (0..kdim).flat_map(|a| (a..kdim).map(move |b| (a, b))).collect();
    let rhs = |t: f64, tc: f64, y: &[Mat]| {
        let u = basis.combine(base, tc, 0);
        let m = sys.vector_field(t, u.as_slice());
        let w: Vec<Mat> = (0..kdim)
            .map(|c| {
                let dir = directions.column(c).into_owned();
                sys.control_matrix(basis.combine(&dir, tc, 0).as_slice())
            })
            .collect();
        let mut out = Vec::with_capacity(y.len());
        out.push(&m * &y[0]);
        for c in 0..kdim {
            out.push(&m * &y[1 + c] + &w[c] * &y[0]);
        }
        for (p, &(a, b)) in pairs.iter().enumerate() {
            out.push(&m * &y[1 + kdim + p] + &w[a] * &y[1 + b] + &w[b] * &y[1 + a]);
        }
        out
    };
    let mut init = vec![Mat::zeros(n, n); 1 + kdim + pairs.len()];
    init[0] = x0.mat().clone();
    let y = rk4(grid, init, rhs, |_, _| {});
    Ok(pairings
        .iter()
        .map(|p| {
            let mut h = DMatrix::zeros(kdim, kdim);
            for (idx, &(a, b)) in pairs.iter().enumerate() {
                let v = p.dot(&y[1 + kdim + idx]);
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
            h
        })
        .collect())
}
