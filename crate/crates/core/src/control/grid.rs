use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid `0 = t₀ < … < t_N = T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

/// Default resolution per unit time.
pub const STEPS_PER_UNIT_TIME: f64 = 1000.0;
pub const MIN_STEPS: usize = 16;

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if !(t_final > 0.0) || !t_final.is_finite() {
            return Err(Error::InvalidInput(format!("horizon must be positive, got {t_final}")));
        }
        if n_steps < MIN_STEPS {
            return Err(Error::InvalidInput(format!("n_steps must be ≥ {MIN_STEPS}, got {n_steps}")));
        }
        Ok(Self { t_final, n_steps })
    }

    /// `max(16, ⌈1000·T⌉)` steps.
    pub fn with_default_steps(t_final: f64) -> Result<Self> {
        let n = (STEPS_PER_UNIT_TIME * t_final).ceil().max(MIN_STEPS as f64) as usize;
        Self::new(t_final, n)
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn step(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.t_final
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|i| self.node(i)).collect()
    }

    /// Same horizon, `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Self {
        Self { t_final: self.t_final, n_steps: self.n_steps * factor }
    }

    /// Quadrature weights on the nodes: composite Simpson, with a 3/8 tail when `N` is odd.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let n = self.n_steps;
        let h = self.step();
        let mut w = vec![0.0; n + 1];
        let even_part = if n % 2 == 0 { n } else { n - 3 };
        for i in (0..even_part).step_by(2) {
            w[i] += h / 3.0;
            w[i + 1] += 4.0 * h / 3.0;
            w[i + 2] += h / 3.0;
        }
        if n % 2 == 1 {
            let s = even_part;
            for (o, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
                w[s + o] += 3.0 * h / 8.0 * c;
            }
        }
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_grids() {
        assert!(TimeGrid::new(1.0, 8).is_err());
        assert!(TimeGrid::new(0.0, 100).is_err());
        assert_eq!(TimeGrid::with_default_steps(1.5).unwrap().n_steps(), 1500);
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for n in [16, 17, 33, 100] {
            let g = TimeGrid::new(2.0, n).unwrap();
            let w = g.simpson_weights();
            let s: f64 = g.nodes().iter().zip(&w).map(|(t, wi)| wi * t.powi(3)).sum();
            assert!((s - 4.0).abs() < 1e-12, "n={n}");
        }
    }
}
