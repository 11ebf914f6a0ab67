use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::fpoly;
use super::spline::CubicSpline;
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre;

/// Smooth basis on [0, T]: per channel, `w(τ)·L_p(2τ − 1)` with `w(τ) = (4τ(1 − τ))³`, τ = t/T.
///
/// Every element vanishes together with its first two derivatives at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlBasis {
    t_final: f64,
    channels: usize,
    degree: usize,
    /// Monomial coefficients in τ.
    profiles: Vec<Vec<f64>>,
    /// `∫₀ᵀ φ_p φ_q dt`.
    profile_gram: DMatrix<f64>,
}

pub const DEFAULT_BASIS_DEGREE: usize = 6;

impl ControlBasis {
    pub fn new(t_final: f64, channels: usize, degree: usize) -> Result<Self> {
        if !(t_final > 0.0) || channels == 0 {
            return Err(Error::InvalidInput("basis needs T > 0 and at least one channel".into()));
        }
        let window = fpoly::pow(&[0.0, 4.0, -4.0], 3);
        let profiles: Vec<Vec<f64>> = fpoly::shifted_legendre(degree).iter().map(|l| fpoly::mul(&window, l)).collect();
        let (x, w) = gauss_legendre(degree + 8);
        let mut gram = DMatrix::zeros(degree + 1, degree + 1);
        for (xi, wi) in x.iter().zip(&w) {
            let tau = 0.5 * (xi + 1.0);
            let vals: Vec<f64> = profiles.iter().map(|c| fpoly::eval(c, tau)).collect();
            for p in 0..=degree {
                for q in 0..=degree {
                    gram[(p, q)] += 0.5 * wi * vals[p] * vals[q] * t_final;
                }
            }
        }
        Ok(Self { t_final, channels, degree, profiles, profile_gram: gram })
    }

    pub fn windowed_legendre(t_final: f64, channels: usize) -> Result<Self> {
        Self::new(t_final, channels, DEFAULT_BASIS_DEGREE)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn per_channel(&self) -> usize {
        self.degree + 1
    }

    pub fn len(&self) -> usize {
        self.channels * self.per_channel()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, channel: usize, p: usize) -> usize {
        channel * self.per_channel() + p
    }

    pub fn channel_of(&self, b: usize) -> usize {
        b / self.per_channel()
    }

    /// `d^order/dt^order φ_p(t)` for p = 0..=degree; zero outside [0, T].
    pub fn profile_values(&self, t: f64, order: usize) -> Vec<f64> {
        if t < 0.0 || t > self.t_final {
            return vec![0.0; self.per_channel()];
        }
        let tau = t / self.t_final;
        let scale = self.t_final.powi(-(order as i32));
        self.profiles
            .iter()
            .map(|c| {
                let mut d = c.clone();
                for _ in 0..order {
                    d = fpoly::derivative(&d);
                }
                fpoly::eval(&d, tau) * scale
            })
            .collect()
    }

    /// Channel values of `Σ λ_b φ_b` at `t`.
    pub fn combine(&self, coeffs: &DVector<f64>, t: f64, order: usize) -> DVector<f64> {
        let phi = self.profile_values(t, order);
        let p = self.per_channel();
        DVector::from_fn(self.channels, |c, _| (0..p).map(|q| coeffs[c * p + q] * phi[q]).sum())
    }

    /// Exact `∫₀ᵀ ⟨φ_a, φ_b⟩ dt`.
    pub fn gramian(&self) -> DMatrix<f64> {
        let p = self.per_channel();
        let mut g = DMatrix::zeros(self.len(), self.len());
        for c in 0..self.channels {
            g.view_mut((c * p, c * p), (p, p)).copy_from(&self.profile_gram);
        }
        g
    }
}

/// `u : [0, T] → ℝᵏ`.
#[derive(Clone)]
pub enum ControlSignal {
    Zero { k: usize },
    /// Per-channel natural cubic splines through grid samples; zero outside the sample range.
    Samples { channels: Vec<CubicSpline> },
    Basis { basis: Arc<ControlBasis>, coeffs: DVector<f64> },
    /// `inner(t − offset)`.
    Shifted { inner: Box<ControlSignal>, offset: f64 },
    /// Closure-defined values; derivatives are approximated by finite differences.
    Analytic { k: usize, func: Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync> },
}

impl fmt::Debug for ControlSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero { k } => write!(f, "Zero {{ k: {k} }}"),
            Self::Samples { channels } => write!(f, "Samples {{ k: {} }}", channels.len()),
            Self::Basis { coeffs, .. } => write!(f, "Basis {{ coeffs: {:?} }}", coeffs.as_slice()),
            Self::Shifted { inner, offset } => write!(f, "Shifted {{ offset: {offset}, inner: {inner:?} }}"),
            Self::Analytic { k, .. } => write!(f, "Analytic {{ k: {k} }}"),
        }
    }
}

/// L², C⁰, C¹, C² norms; Cʳ = Σ_{l≤r} sup |u⁽ˡ⁾|.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlNorms {
    pub l2: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

const NORM_SAMPLES: usize = 4000;

impl ControlSignal {
    pub fn zero(k: usize) -> Self {
        Self::Zero { k }
    }

    pub fn from_basis(basis: Arc<ControlBasis>, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(Error::Dimension(format!("{} coefficients for a basis of size {}", coeffs.len(), basis.len())));
        }
        Ok(Self::Basis { basis, coeffs })
    }

    /// Spline through `values[i] ∈ ℝᵏ` at `times[i]`.
    pub fn from_samples(times: &[f64], values: &[DVector<f64>]) -> Result<Self> {
        if times.len() != values.len() || values.is_empty() {
            return Err(Error::InvalidInput("sample count mismatch".into()));
        }
        let k = values[0].len();
        if values.iter().any(|v| v.len() != k) {
            return Err(Error::InvalidInput("ragged control samples".into()));
        }
        let channels = (0..k)
            .map(|c| CubicSpline::new(times.to_vec(), values.iter().map(|v| v[c]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::Samples { channels })
    }

    pub fn analytic(k: usize, func: impl Fn(f64) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self::Analytic { k, func: Arc::new(func) }
    }

    pub fn shifted(self, offset: f64) -> Self {
        Self::Shifted { inner: Box::new(self), offset }
    }

    pub fn k(&self) -> usize {
        match self {
            Self::Zero { k } | Self::Analytic { k, .. } => *k,
            Self::Samples { channels } => channels.len(),
            Self::Basis { basis, .. } => basis.channels(),
            Self::Shifted { inner, .. } => inner.k(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero { .. } => true,
            Self::Basis { coeffs, .. } => coeffs.iter().all(|c| *c == 0.0),
            Self::Shifted { inner, .. } => inner.is_zero(),
            _ => false,
        }
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        match self {
            Self::Zero { k } => DVector::zeros(*k),
            Self::Samples { channels } => {
                let (a, b) = channels[0].domain();
                if t < a || t > b {
                    DVector::zeros(channels.len())
                } else {
                    DVector::from_iterator(channels.len(), channels.iter().map(|s| s.eval(t, 0)))
                }
            }
            Self::Basis { basis, coeffs } => basis.combine(coeffs, t, 0),
            Self::Shifted { inner, offset } => inner.value(t - offset),
            Self::Analytic { func, .. } => func(t),
        }
    }

    /// Exact derivative when the representation carries one.
    pub fn derivative(&self, t: f64, order: usize) -> Option<DVector<f64>> {
        if order == 0 {
            return Some(self.value(t));
        }
        match self {
            Self::Zero { k } => Some(DVector::zeros(*k)),
            Self::Samples { channels } => {
                let (a, b) = channels[0].domain();
                Some(if t < a || t > b {
                    DVector::zeros(channels.len())
                } else {
                    DVector::from_iterator(channels.len(), channels.iter().map(|s| s.eval(t, order)))
                })
            }
            Self::Basis { basis, coeffs } => Some(basis.combine(coeffs, t, order)),
            Self::Shifted { inner, offset } => inner.derivative(t - offset, order),
            Self::Analytic { .. } => None,
        }
    }

    fn derivative_or_fd(&self, t: f64, order: usize, h: f64) -> DVector<f64> {
        if let Some(d) = self.derivative(t, order) {
            return d;
        }
        match order {
            0 => self.value(t),
            1 => (self.value(t + h) - self.value(t - h)) / (2.0 * h),
            _ => (self.value(t + h) - self.value(t) * 2.0 + self.value(t - h)) / (h * h),
        }
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ControlSignal, b: f64) -> Result<ControlSignal> {
        if self.k() != other.k() {
            return Err(Error::Dimension(format!("channel mismatch {} vs {}", self.k(), other.k())));
        }
        match (self, other) {
            (Self::Zero { .. }, _) => other.scaled(b),
            (_, Self::Zero { .. }) => self.scaled(a),
            (Self::Basis { basis: b1, coeffs: c1 }, Self::Basis { basis: b2, coeffs: c2 })
                if Arc::ptr_eq(b1, b2) || b1 == b2 =>
            {
                Ok(Self::Basis { basis: b1.clone(), coeffs: c1 * a + c2 * b })
            }
            _ => {
                let (u, v) = (self.clone(), other.clone());
                Ok(Self::analytic(self.k(), move |t| u.value(t) * a + v.value(t) * b))
            }
        }
    }

    pub fn scaled(&self, a: f64) -> Result<ControlSignal> {
        Ok(match self {
            Self::Zero { k } => Self::Zero { k: *k },
            Self::Basis { basis, coeffs } => Self::Basis { basis: basis.clone(), coeffs: coeffs * a },
            Self::Shifted { inner, offset } => Self::Shifted { inner: Box::new(inner.scaled(a)?), offset: *offset },
            _ => {
                let u = self.clone();
                Self::analytic(self.k(), move |t| u.value(t) * a)
            }
        })
    }

    /// `‖u‖_{L²(0,T)}` by composite Simpson on `n` intervals (`n` even).
    pub fn l2_simpson(&self, t_final: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = t_final / n as f64;
        let w = crate::quadrature::simpson_weights(n, h);
        w.iter().enumerate().map(|(i, wi)| wi * self.value(i as f64 * h).norm_squared()).sum::<f64>().sqrt()
    }

    /// L² norm: exact Gramian for basis signals, Simpson otherwise.
    pub fn l2_norm(&self, t_final: f64) -> f64 {
        match self {
            Self::Zero { .. } => 0.0,
            Self::Basis { basis, coeffs } => (coeffs.transpose() * basis.gramian() * coeffs)[0].max(0.0).sqrt(),
            _ => self.l2_simpson(t_final, NORM_SAMPLES),
        }
    }

    /// `sup_{[0,T]} |u⁽ˡ⁾|` (Euclidean norm over channels) on a fine sample.
    pub fn sup_derivative(&self, t_final: f64, order: usize) -> f64 {
        let h = t_final / NORM_SAMPLES as f64;
        let fd = h * 0.5;
        (0..=NORM_SAMPLES)
            .map(|i| self.derivative_or_fd(i as f64 * h, order, fd).norm())
            .fold(0.0, f64::max)
    }

    pub fn norms(&self, t_final: f64) -> ControlNorms {
        let s0 = self.sup_derivative(t_final, 0);
        let s1 = self.sup_derivative(t_final, 1);
        let s2 = self.sup_derivative(t_final, 2);
        ControlNorms { l2: self.l2_norm(t_final), c0: s0, c1: s0 + s1, c2: s0 + s1 + s2 }
    }

    /// Basis coefficients, when the signal is in basis form.
    pub fn coefficients(&self) -> Option<&DVector<f64>> {
        match self {
            Self::Basis { coeffs, .. } => Some(coeffs),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_vanishes_to_second_order_at_ends() {
        let b = ControlBasis::windowed_legendre(2.0, 2).unwrap();
        for order in 0..3 {
            for t in [0.0, 2.0] {
                assert!(b.profile_values(t, order).iter().all(|v| v.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn gramian_matches_simpson() {
        let basis = Arc::new(ControlBasis::windowed_legendre(1.5, 3).unwrap());
        let coeffs = DVector::from_fn(basis.len(), |i, _| ((i * 7 + 3) % 5) as f64 - 2.0);
        let u = ControlSignal::from_basis(basis, coeffs).unwrap();
        let exact = u.l2_norm(1.5);
        let simpson = u.l2_simpson(1.5, 4000);
        assert!((exact - simpson).abs() < 1e-10, "{exact} vs {simpson}");
    }

    #[test]
    fn basis_derivatives_match_finite_differences() {
        let basis = Arc::new(ControlBasis::windowed_legendre(1.0, 1).unwrap());
        let u = ControlSignal::from_basis(basis, DVector::from_element(7, 0.3)).unwrap();
        let t = 0.37;
        let h = 1e-5;
        let fd = (u.value(t + h) - u.value(t - h)) / (2.0 * h);
        assert!((fd - u.derivative(t, 1).unwrap()).norm() < 1e-7);
    }
}
