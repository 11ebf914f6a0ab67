use nalgebra::DMatrix;

use super::brackets::bracket_sequence;
use super::differential::second_differential;
use super::grid::TimeGrid;
use super::signal::ControlSignal;
use super::system::BilinearSystem;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;
use crate::symplectic::{SymplecticMatrix, SymplecticTangent};

const PANELS: usize = 48;
const ORDER: usize = 10;
const SUPPORT_SAMPLES: usize = 400;

/// Trace coefficients of the kernel
/// `𝒫ᵢⱼ(t,s) = s·a + t·b + (s²/2)·c + (t²/2)·d + ts·e`.
#[derive(Debug, Clone)]
pub struct KernelCoefficients {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub e: DMatrix<f64>,
}

pub fn kernel_coefficients(sys: &BilinearSystem, p: &SymplecticTangent) -> Result<KernelCoefficients> {
    let seq = bracket_sequence(sys, &[0.0], 2)?;
    let k = sys.k();
    // tr(Pᵀ S(T) M) = ⟨S(T)ᵀ P, M⟩
    let ps = p.anchor.mat().transpose() * &p.base;
    let tr = |x: &nalgebra::DMatrix<f64>| ps.dot(x);
    let g = |i: usize, j: usize| seq.get(0, i, j);
    let build = |f: &dyn Fn(usize, usize) -> f64| DMatrix::from_fn(k, k, |i, j| f(i, j));
    Ok(KernelCoefficients {
        a: build(&|i, j| tr(&(g(i, 0) * g(j, 1)))),
        b: build(&|i, j| tr(&(g(i, 1) * g(j, 0)))),
        c: build(&|i, j| tr(&(g(i, 0) * g(j, 2)))),
        d: build(&|i, j| tr(&(g(i, 2) * g(j, 0)))),
        e: build(&|i, j| tr(&(g(i, 1) * g(j, 1)))),
    })
}

fn check_support(u: &ControlSignal, delta: f64, t_final: f64) -> Result<()> {
    for i in 1..=SUPPORT_SAMPLES {
        let t = delta + (t_final - delta) * i as f64 / SUPPORT_SAMPLES as f64;
        let v = u.value(t).norm();
        if v > 1e-14 {
            return Err(Error::SupportViolation { delta, time: t, value: v });
        }
    }
    Ok(())
}

/// `Q_δ(u) = 2 Σᵢⱼ ∫₀^δ ∫₀ᵗ uᵢ(t) uⱼ(s) 𝒫ᵢⱼ(t,s) ds dt` by composite Gauss–Legendre quadrature.
pub fn qdelta_form(sys: &BilinearSystem, grid: &TimeGrid, p: &SymplecticTangent, delta: f64, u: &ControlSignal) -> Result<f64> {
    if !(delta > 0.0 && delta < grid.t_final()) {
        return Err(Error::InvalidInput(format!("δ = {delta} outside (0, {})", grid.t_final())));
    }
    if u.k() != sys.k() {
        return Err(Error::Dimension("control channel mismatch".into()));
    }
    check_support(u, delta, grid.t_final())?;
    let kc = kernel_coefficients(sys, p)?;
    Ok(qdelta_with(&kc, delta, u))
}

/// Quadrature core of [`qdelta_form`] for precomputed kernel coefficients.
pub fn qdelta_with(kc: &KernelCoefficients, delta: f64, u: &ControlSignal) -> f64 {
    let (x, w) = gauss_legendre(ORDER);
    let h = delta / PANELS as f64;
    let k = u.k();
    // Running moments ∫₀ᵗ sʳ u(s) ds, r = 0, 1, 2, at panel starts.
    let mut base = [nalgebra::DVector::zeros(k), nalgebra::DVector::zeros(k), nalgebra::DVector::zeros(k)];
    let moments_on = |lo: f64, hi: f64| {
        let mut m = [nalgebra::DVector::zeros(k), nalgebra::DVector::zeros(k), nalgebra::DVector::zeros(k)];
        for (xi, wi) in x.iter().zip(&w) {
            let s = lo + 0.5 * (hi - lo) * (xi + 1.0);
            let us = u.value(s) * (0.5 * (hi - lo) * wi);
            m[0] += &us;
            m[1] += &us * s;
            m[2] += &us * (0.5 * s * s);
        }
        m
    };
    let mut total = 0.0;
    for panel in 0..PANELS {
        let lo = panel as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            let t = lo + 0.5 * h * (xi + 1.0);
            let part = moments_on(lo, t);
            let i0 = &base[0] + &part[0];
            let i1 = &base[1] + &part[1];
            let i2 = &base[2] + &part[2];
            let inner = &kc.a * &i1 + &kc.b * &i0 * t + &kc.c * &i2 + &kc.d * &i0 * (0.5 * t * t) + &kc.e * &i1 * t;
            total += 0.5 * h * wi * u.value(t).dot(&inner);
        }
        let full = moments_on(lo, lo + h);
        for r in 0..3 {
            base[r] += &full[r];
        }
    }
    2.0 * total
}

/// `|⟨P, D₀²E(u)⟩ − Q_δ(u)|`.
pub fn qdelta_gap(sys: &BilinearSystem, grid: &TimeGrid, p: &SymplecticTangent, delta: f64, u: &ControlSignal) -> Result<f64> {
    let q = qdelta_form(sys, grid, p, delta, u)?;
    let d2 = second_differential(sys, &SymplecticMatrix::identity(sys.m()), grid, u)?;
    Ok((p.base.dot(&d2) - q).abs())
}
