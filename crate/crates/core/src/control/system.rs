use std::sync::Arc;

use super::drift::{ConstantDrift, Drift};
use crate::error::{Error, Result};
use crate::symplectic::{self, half_dim, Mat};

/// `Ẋ = (A(t) + Σ uᵢ(t) Bᵢ) X` with `JA(t)`, `JBᵢ` symmetric.
#[derive(Debug, Clone)]
pub struct BilinearSystem {
    m: usize,
    drift: Arc<dyn Drift>,
    generators: Vec<Mat>,
    tol: f64,
    resymplectify: bool,
}

/// Times at which the drift is checked for the Hamiltonian structure on construction.
const DRIFT_CHECK_TIMES: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

impl BilinearSystem {
    pub fn new(drift: Arc<dyn Drift>, generators: Vec<Mat>, tol: f64) -> Result<Self> {
        let m = half_dim(&drift.at(0.0))?;
        for (i, b) in generators.iter().enumerate() {
            if b.shape() != (2 * m, 2 * m) {
                return Err(Error::Dimension(format!("generator {i} has shape {:?}", b.shape())));
            }
            let asym = symplectic::hamiltonian_asymmetry(b)?;
            if asym > tol * (1.0 + b.norm()) {
                return Err(Error::NotHamiltonian(asym));
            }
        }
        for t in DRIFT_CHECK_TIMES {
            let a = drift.at(t);
            let asym = symplectic::hamiltonian_asymmetry(&a)?;
            if asym > tol * (1.0 + a.norm()) {
                return Err(Error::NotHamiltonian(asym));
            }
        }
        Ok(Self { m, drift, generators, tol, resymplectify: false })
    }

    pub fn constant(a: Mat, generators: Vec<Mat>) -> Result<Self> {
        Self::new(Arc::new(ConstantDrift(a)), generators, symplectic::DEFAULT_TOL)
    }

    /// Re-project every RK4 step back onto Sp(m).
    pub fn with_resymplectify(mut self, on: bool) -> Self {
        self.resymplectify = on;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Same generators, different drift.
    pub fn with_drift(&self, drift: Arc<dyn Drift>) -> Result<Self> {
        Ok(Self::new(drift, self.generators.clone(), self.tol)?.with_resymplectify(self.resymplectify))
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        2 * self.m
    }

    pub fn k(&self) -> usize {
        self.generators.len()
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn resymplectifies(&self) -> bool {
        self.resymplectify
    }

    pub fn drift(&self) -> &Arc<dyn Drift> {
        &self.drift
    }

    pub fn generators(&self) -> &[Mat] {
        &self.generators
    }

    /// `Σ cᵢ Bᵢ`.
    pub fn control_matrix(&self, c: &[f64]) -> Mat {
        let mut out = Mat::zeros(self.dim(), self.dim());
        for (ci, b) in c.iter().zip(&self.generators) {
            if *ci != 0.0 {
                out += b * *ci;
            }
        }
        out
    }

    /// `A(t) + Σ uᵢ Bᵢ`.
    pub fn vector_field(&self, t: f64, u: &[f64]) -> Mat {
        self.drift.at(t) + self.control_matrix(u)
    }
}
