use std::fmt::Debug;

use super::spline::CubicSpline;
use crate::error::{Error, Result};
use crate::symplectic::Mat;

/// Time-dependent drift `A(t)`.
pub trait Drift: Send + Sync + Debug {
    fn dim(&self) -> usize;

    fn at(&self, t: f64) -> Mat;

    /// `d^order/dt^order A(t)`.
    fn derivative(&self, t: f64, order: usize) -> Result<Mat>;

    /// Highest derivative order available; `None` for analytic drifts.
    fn max_derivative(&self) -> Option<usize>;
}

#[derive(Debug, Clone)]
pub struct ConstantDrift(pub Mat);

impl Drift for ConstantDrift {
    fn dim(&self) -> usize {
        self.0.nrows()
    }

    fn at(&self, _t: f64) -> Mat {
        self.0.clone()
    }

    fn derivative(&self, _t: f64, order: usize) -> Result<Mat> {
        Ok(if order == 0 { self.0.clone() } else { Mat::zeros(self.0.nrows(), self.0.ncols()) })
    }

    fn max_derivative(&self) -> Option<usize> {
        None
    }
}

/// Entrywise cubic-spline interpolation of sampled drift matrices.
///
/// Only the first derivative is exposed for bracket generation.
#[derive(Debug, Clone)]
pub struct SampledDrift {
    dim: usize,
    entries: Vec<CubicSpline>,
}

pub const SAMPLED_MAX_DERIVATIVE: usize = 1;

impl SampledDrift {
    pub fn new(times: &[f64], samples: &[Mat]) -> Result<Self> {
        let dim = samples.first().map(|m| m.nrows()).ok_or_else(|| Error::InvalidInput("no drift samples".into()))?;
        if samples.iter().any(|m| m.shape() != (dim, dim)) {
            return Err(Error::Dimension("drift samples of differing shape".into()));
        }
        let entries = (0..dim * dim)
            .map(|e| CubicSpline::new(times.to_vec(), samples.iter().map(|m| m[(e / dim, e % dim)]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dim, entries })
    }

    fn eval(&self, t: f64, order: usize) -> Mat {
        Mat::from_fn(self.dim, self.dim, |i, j| self.entries[i * self.dim + j].eval(t, order))
    }
}

impl Drift for SampledDrift {
    fn dim(&self) -> usize {
        self.dim
    }

    fn at(&self, t: f64) -> Mat {
        self.eval(t, 0)
    }

    fn derivative(&self, t: f64, order: usize) -> Result<Mat> {
        if order > 2 {
            return Err(Error::Smoothness { requested: order, available: 2 });
        }
        Ok(self.eval(t, order))
    }

    fn max_derivative(&self) -> Option<usize> {
        Some(SAMPLED_MAX_DERIVATIVE)
    }
}
