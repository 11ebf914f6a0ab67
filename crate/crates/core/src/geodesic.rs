//! The Jacobi-equation control system `J̈ + (R(t) − U(t))J = 0` written on Sp(m).

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{
    bracket_sequence, propagate_fundamental, BilinearSystem, ControlSignal, CubicSpline, Drift, TimeGrid,
};
use crate::error::{Error, Result};
use crate::linalg::{self, REL_RANK_TOL};
use crate::symplectic::{Mat, SymplecticMatrix, DEFAULT_TOL};

const SYMMETRY_TOL: f64 = 1e-12;

/// `(E(ij))_{kl} = δ_ik δ_jl + δ_il δ_jk` (so `E(ii)` has a single entry 2).
pub fn e_sym(m: usize, i: usize, j: usize) -> Mat {
    let mut e = Mat::zeros(m, m);
    e[(i, j)] += 1.0;
    e[(j, i)] += 1.0;
    e
}

/// `(F(pq))_{rs} = δ_rp δ_sq − δ_rq δ_sp`.
pub fn f_skew(m: usize, p: usize, q: usize) -> Mat {
    let mut f = Mat::zeros(m, m);
    f[(p, q)] += 1.0;
    f[(q, p)] -= 1.0;
    f
}

/// `[[0, 0], [E(ij), 0]]`.
pub fn control_generator(m: usize, i: usize, j: usize) -> Mat {
    let mut g = Mat::zeros(2 * m, 2 * m);
    g.view_mut((m, 0), (m, m)).copy_from(&e_sym(m, i, j));
    g
}

/// Channel layout: lexicographic `(i, j)` with `i ≤ j`.
pub fn channel_pairs(m: usize) -> Vec<(usize, usize)> {
    (0..m).flat_map(|i| (i..m).map(move |j| (i, j))).collect()
}

pub fn channel_count(m: usize) -> usize {
    m * (m + 1) / 2
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let m = a.nrows();
    let mut out = Mat::zeros(2 * m, 2 * m);
    out.view_mut((0, 0), (m, m)).copy_from(a);
    out.view_mut((m, m), (m, m)).copy_from(b);
    out
}

/// `B¹_{ij} = [[−E(ij), 0], [0, E(ij)]]`.
pub fn closed_b1(m: usize, i: usize, j: usize) -> Mat {
    let e = e_sym(m, i, j);
    block_diag(&-&e, &e)
}

/// `B²_{ij}(t) = [[0, −2E(ij)], [−E(ij)R(t) − R(t)E(ij), 0]]`.
pub fn closed_b2(r: &Mat, i: usize, j: usize) -> Mat {
    let m = r.nrows();
    let e = e_sym(m, i, j);
    let mut out = Mat::zeros(2 * m, 2 * m);
    out.view_mut((0, m), (m, m)).copy_from(&(&e * -2.0));
    out.view_mut((m, 0), (m, m)).copy_from(&(-(&e * r) - r * &e));
    out
}

/// `[B¹_{ij}, B¹_{kl}] = diag([E(ij),E(kl)], [E(ij),E(kl)])`.
pub fn closed_b1_commutator(m: usize, ij: (usize, usize), kl: (usize, usize)) -> Mat {
    let a = e_sym(m, ij.0, ij.1);
    let b = e_sym(m, kl.0, kl.1);
    let c = &a * &b - &b * &a;
    block_diag(&c, &c)
}

#[derive(Debug, Clone)]
pub enum CurvatureForm {
    Flat,
    /// `R ≡ c·I`.
    Constant(f64),
    /// `R ≡ R₀`.
    Matrix(Mat),
    /// `R_ij(t) = amplitude·cos(frequency·t + (i + j)π/4)` with 0-based indices.
    Oscillatory { amplitude: f64, frequency: f64 },
    /// Cubic splines through the upper-triangular entries.
    Sampled { entries: Vec<CubicSpline> },
    /// `R(t + offset)`.
    Shifted { inner: Box<CurvatureProfile>, offset: f64 },
    /// `R(t) − Σ u_ij(t) E(ij)`.
    Updated { inner: Box<CurvatureProfile>, control: ControlSignal },
}

/// Symmetric curvature path `R(t)`.
#[derive(Debug, Clone)]
pub struct CurvatureProfile {
    m: usize,
    form: CurvatureForm,
}

impl CurvatureProfile {
    pub fn flat(m: usize) -> Self {
        Self { m, form: CurvatureForm::Flat }
    }

    pub fn constant(m: usize, c: f64) -> Self {
        Self { m, form: CurvatureForm::Constant(c) }
    }

    pub fn oscillatory(m: usize, amplitude: f64, frequency: f64) -> Self {
        Self { m, form: CurvatureForm::Oscillatory { amplitude, frequency } }
    }

    pub fn matrix(r0: Mat) -> Result<Self> {
        let m = r0.nrows();
        if r0.ncols() != m || m == 0 {
            return Err(Error::Dimension(format!("curvature must be square, got {:?}", r0.shape())));
        }
        let asym = (&r0 - r0.transpose()).norm();
        if asym > SYMMETRY_TOL * (1.0 + r0.norm()) {
            return Err(Error::InvalidInput(format!("curvature matrix is not symmetric (asymmetry {asym:.3e})")));
        }
        Ok(Self { m, form: CurvatureForm::Matrix(r0) })
    }

    /// Samples `R(tᵢ)`, symmetrized as `(R + Rᵀ)/2`.
    pub fn sampled(times: &[f64], samples: &[Mat]) -> Result<Self> {
        let m = samples.first().map(|r| r.nrows()).ok_or_else(|| Error::InvalidInput("no curvature samples".into()))?;
        if samples.iter().any(|r| r.shape() != (m, m)) {
            return Err(Error::Dimension("curvature samples of differing shape".into()));
        }
        let sym: Vec<Mat> = samples.iter().map(|r| (r + r.transpose()) * 0.5).collect();
        let entries = channel_pairs(m)
            .into_iter()
            .map(|(i, j)| CubicSpline::new(times.to_vec(), sym.iter().map(|r| r[(i, j)]).collect()))
            .collect::<Result<_>>()?;
        Ok(Self { m, form: CurvatureForm::Sampled { entries } })
    }

    pub fn shifted(&self, offset: f64) -> Self {
        if offset == 0.0 {
            return self.clone();
        }
        Self { m: self.m, form: CurvatureForm::Shifted { inner: Box::new(self.clone()), offset } }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn form(&self) -> &CurvatureForm {
        &self.form
    }

    pub fn at(&self, t: f64) -> Mat {
        self.derivative(t, 0).expect("order 0 is always available")
    }

    pub fn derivative(&self, t: f64, order: usize) -> Result<Mat> {
        let m = self.m;
        Ok(match &self.form {
            CurvatureForm::Flat => Mat::zeros(m, m),
            CurvatureForm::Constant(c) => {
                if order == 0 {
                    Mat::identity(m, m) * *c
                } else {
                    Mat::zeros(m, m)
                }
            }
            CurvatureForm::Matrix(r0) => {
                if order == 0 {
                    r0.clone()
                } else {
                    Mat::zeros(m, m)
                }
            }
            CurvatureForm::Oscillatory { amplitude, frequency } => Mat::from_fn(m, m, |i, j| {
                let phase = frequency * t + (i + j) as f64 * FRAC_PI_4 + order as f64 * FRAC_PI_2;
                amplitude * frequency.powi(order as i32) * phase.cos()
            }),
            CurvatureForm::Sampled { entries } => {
                if order > 2 {
                    return Err(Error::Smoothness { requested: order, available: 2 });
                }
                let mut r = Mat::zeros(m, m);
                for ((i, j), s) in channel_pairs(m).into_iter().zip(entries) {
                    let v = s.eval(t, order);
                    r[(i, j)] = v;
                    r[(j, i)] = v;
                }
                r
            }
            CurvatureForm::Shifted { inner, offset } => inner.derivative(t + offset, order)?,
            CurvatureForm::Updated { inner, control } => {
                let u = control.derivative(t, order).ok_or(Error::Smoothness { requested: order, available: 0 })?;
                inner.derivative(t, order)? - assemble_update(m, u.as_slice())
            }
        })
    }

    pub fn max_derivative(&self) -> Option<usize> {
        match &self.form {
            CurvatureForm::Sampled { .. } => Some(crate::control::drift::SAMPLED_MAX_DERIVATIVE),
            CurvatureForm::Shifted { inner, .. } => inner.max_derivative(),
            CurvatureForm::Updated { inner, control } => {
                let own = match control {
                    ControlSignal::Basis { .. } | ControlSignal::Zero { .. } => None,
                    ControlSignal::Shifted { inner: c, .. } if matches!(**c, ControlSignal::Basis { .. }) => None,
                    ControlSignal::Samples { .. } => Some(crate::control::drift::SAMPLED_MAX_DERIVATIVE),
                    _ => Some(0),
                };
                match (inner.max_derivative(), own) {
                    (Some(a), Some(b)) => Some(a.min(b)),
                    (a, b) => a.or(b),
                }
            }
            _ => None,
        }
    }
}

/// `U = Σ_{i≤j} u_ij E(ij)`: off-diagonal entries `u_ij`, diagonal entries `2u_ii`.
pub fn assemble_update(m: usize, u: &[f64]) -> Mat {
    let mut out = Mat::zeros(m, m);
    for ((i, j), v) in channel_pairs(m).into_iter().zip(u) {
        out += e_sym(m, i, j) * *v;
    }
    out
}

/// `A(t) = [[0, I], [−R(t), 0]]`.
#[derive(Debug, Clone)]
pub struct GeodesicDrift(pub CurvatureProfile);

impl Drift for GeodesicDrift {
    fn dim(&self) -> usize {
        2 * self.0.m()
    }

    fn at(&self, t: f64) -> Mat {
        self.derivative(t, 0).expect("order 0")
    }

    fn derivative(&self, t: f64, order: usize) -> Result<Mat> {
        let m = self.0.m();
        let mut a = Mat::zeros(2 * m, 2 * m);
        if order == 0 {
            a.view_mut((0, m), (m, m)).copy_from(&Mat::identity(m, m));
        }
        a.view_mut((m, 0), (m, m)).copy_from(&-self.0.derivative(t, order)?);
        Ok(a)
    }

    fn max_derivative(&self) -> Option<usize> {
        self.0.max_derivative()
    }
}

/// System (3.3): drift `[[0, I], [−R, 0]]`, generators `ℰ(ij)` in lexicographic order.
pub fn build_system(r: &CurvatureProfile) -> Result<BilinearSystem> {
    for t in [0.0, 0.5, 1.0] {
        let rt = r.at(t);
        let asym = (&rt - rt.transpose()).norm();
        if asym > SYMMETRY_TOL * (1.0 + rt.norm()) {
            return Err(Error::InvalidInput(format!("curvature is not symmetric at t = {t}")));
        }
    }
    let m = r.m();
    let gens = channel_pairs(m).into_iter().map(|(i, j)| control_generator(m, i, j)).collect();
    BilinearSystem::new(Arc::new(GeodesicDrift(r.clone())), gens, DEFAULT_TOL)
}

/// Linearized Poincaré map `(J(0), J̇(0)) ↦ (J(T), J̇(T))`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoincareMap {
    pub matrix: SymplecticMatrix,
    pub horizon: f64,
}

pub fn jacobi_propagate(r: &CurvatureProfile, t_final: f64) -> Result<PoincareMap> {
    jacobi_propagate_on(r, &TimeGrid::with_default_steps(t_final)?)
}

pub fn jacobi_propagate_on(r: &CurvatureProfile, grid: &TimeGrid) -> Result<PoincareMap> {
    let sys = build_system(r)?;
    let fs = propagate_fundamental(&sys, grid)?;
    Ok(PoincareMap { matrix: fs.final_state().clone(), horizon: grid.t_final() })
}

/// Deviations between generated brackets and their closed forms.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketIdentityReport {
    pub time: f64,
    pub b1_deviation: f64,
    pub b2_deviation: f64,
    pub b1_commutator_deviation: f64,
    /// `max |[E(ij), E(kl)] − (δ_il F(jk) + δ_jk F(il) + δ_ik F(jl) + δ_jl F(ik))|`.
    pub e_commutator_deviation: f64,
}

impl BracketIdentityReport {
    pub fn max_deviation(&self) -> f64 {
        self.b1_deviation.max(self.b2_deviation).max(self.b1_commutator_deviation).max(self.e_commutator_deviation)
    }
}

fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// `F(pq)` with the convention `F(pp) = 0`, `F(qp) = −F(pq)`.
fn f_any(m: usize, p: usize, q: usize) -> Mat {
    f_skew(m, p, q)
}

/// Right side of the commutator identity for `[E(ij), E(kl)]`.
pub fn e_commutator_closed(m: usize, (i, j): (usize, usize), (k, l): (usize, usize)) -> Mat {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    f_any(m, j, k) * d(i, l) + f_any(m, i, l) * d(j, k) + f_any(m, j, l) * d(i, k) + f_any(m, i, k) * d(j, l)
}

pub fn bracket_identities(r: &CurvatureProfile, t: f64) -> Result<BracketIdentityReport> {
    let sys = build_system(r)?;
    let m = r.m();
    let seq = bracket_sequence(&sys, &[t], 2)?;
    let pairs = channel_pairs(m);
    let rt = r.at(t);
    let mut rep = BracketIdentityReport { time: t, b1_deviation: 0.0, b2_deviation: 0.0, b1_commutator_deviation: 0.0, e_commutator_deviation: 0.0 };
    for (c, &(i, j)) in pairs.iter().enumerate() {
        rep.b1_deviation = rep.b1_deviation.max(max_abs(&(seq.get(0, c, 1) - closed_b1(m, i, j))));
        rep.b2_deviation = rep.b2_deviation.max(max_abs(&(seq.get(0, c, 2) - closed_b2(&rt, i, j))));
        for (c2, &(k, l)) in pairs.iter().enumerate() {
            let (a, b) = (seq.get(0, c, 1), seq.get(0, c2, 1));
            let gen = a * b - b * a;
            rep.b1_commutator_deviation = rep.b1_commutator_deviation.max(max_abs(&(gen - closed_b1_commutator(m, (i, j), (k, l)))));
            let (ea, eb) = (e_sym(m, i, j), e_sym(m, k, l));
            let ec = &ea * &eb - &eb * &ea;
            rep.e_commutator_deviation = rep.e_commutator_deviation.max(max_abs(&(ec - e_commutator_closed(m, (i, j), (k, l)))));
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpanReport {
    pub m: usize,
    pub rank: usize,
    pub expected: usize,
    pub satisfied: bool,
}

/// Rank of `{B⁰_{ij}, B¹_{ij}, B²_{ij}(0), [B¹_{ij}, B¹_{kl}]}` for constant curvature `R₀`.
pub fn span_dimension(m: usize, r0: &Mat) -> Result<SpanReport> {
    let r = CurvatureProfile::matrix(r0.clone())?;
    if r.m() != m {
        return Err(Error::Dimension(format!("R₀ is {}×{}, expected m = {m}", r0.nrows(), r0.ncols())));
    }
    let sys = build_system(&r)?;
    let seq = bracket_sequence(&sys, &[0.0], 2)?;
    let mut family: Vec<Mat> = seq.at_time(0).into_iter().cloned().collect();
    let k = sys.k();
    for a in 0..k {
        for b in (a + 1)..k {
            let (x, y) = (seq.get(0, a, 1), seq.get(0, b, 1));
            family.push(x * y - y * x);
        }
    }
    let cols: Vec<_> = family.iter().map(linalg::flatten).collect();
    let rank = linalg::rank(&nalgebra::DMatrix::from_columns(&cols), REL_RANK_TOL);
    let expected = m * (2 * m + 1);
    Ok(SpanReport { m, rank, expected, satisfied: rank == expected })
}

/// `R^h(t) = R(t) − Σ u_ij(t) E(ij)`.
pub fn curvature_update(r: &CurvatureProfile, u: &ControlSignal) -> Result<CurvatureProfile> {
    let k = channel_count(r.m());
    if u.k() != k {
        return Err(Error::Dimension(format!("control has {} channels, curvature needs {k}", u.k())));
    }
    Ok(CurvatureProfile { m: r.m(), form: CurvatureForm::Updated { inner: Box::new(r.clone()), control: u.clone() } })
}
