use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use super::propagate::propagate_fundamental;
use super::spline::CubicSpline;
use super::system::BilinearSystem;
use crate::error::{Error, Result};
use crate::symplectic::Mat;

pub const DEFAULT_J_MAX: usize = 4;

/// `B_i^j(t)` for every requested time, channel and depth `j = 0..=j_max`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketSequence {
    pub times: Vec<f64>,
    pub j_max: usize,
    /// `entries[time][channel][j]`.
    pub entries: Vec<Vec<Vec<Mat>>>,
}

impl BracketSequence {
    pub fn get(&self, time_index: usize, channel: usize, j: usize) -> &Mat {
        &self.entries[time_index][channel][j]
    }

    /// All brackets at one time, flattened over channels and depths.
    pub fn at_time(&self, time_index: usize) -> Vec<&Mat> {
        self.entries[time_index].iter().flat_map(|c| c.iter()).collect()
    }
}

/// Deepest `j_max` the drift's smoothness supports.
pub fn max_depth(sys: &BilinearSystem) -> Option<usize> {
    sys.drift().max_derivative().map(|d| d + 1)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `B^j = Ḃ^{j−1} + [B^{j−1}, A]`, expanded through `D(j, n) = D(j−1, n+1) + Σ_l C(n,l)[D(j−1,l), A^{(n−l)}]`
/// with `D(j, n) = dⁿ/dtⁿ B^j`.
fn brackets_at(sys: &BilinearSystem, t: f64, j_max: usize) -> Result<Vec<Vec<Mat>>> {
    let n = sys.dim();
    let a_derivs: Vec<Mat> = (0..j_max).map(|r| sys.drift().derivative(t, r)).collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(sys.k());
    for b in sys.generators() {
        // d[n] holds the n-th time derivative of the current level.
        let mut d: Vec<Mat> = (0..=j_max).map(|r| if r == 0 { b.clone() } else { Mat::zeros(n, n) }).collect();
        let mut levels = vec![b.clone()];
        for j in 1..=j_max {
            let width = j_max - j;
            let next: Vec<Mat> = (0..=width)
                .map(|order| {
                    let mut acc = d[order + 1].clone();
                    for l in 0..=order {
                        let a = &a_derivs[order - l];
                        acc += (&d[l] * a - a * &d[l]) * binomial(order, l);
                    }
                    acc
                })
                .collect();
            levels.push(next[0].clone());
            d = next;
            d.push(Mat::zeros(n, n));
        }
        out.push(levels);
    }
    Ok(out)
}

pub fn bracket_sequence(sys: &BilinearSystem, times: &[f64], j_max: usize) -> Result<BracketSequence> {
    if let Some(depth) = max_depth(sys) {
        if j_max > depth {
            return Err(Error::Smoothness { requested: j_max.saturating_sub(1), available: depth - 1 });
        }
    }
    let entries = times.iter().map(|&t| brackets_at(sys, t, j_max)).collect::<Result<Vec<_>>>()?;
    Ok(BracketSequence { times: times.to_vec(), j_max, entries })
}

/// Nodes kept away from the ends when spline-differentiating (natural end conditions).
const BOUNDARY_BAND: usize = 24;

/// `max ‖d/dt(S⁻¹B_i^j S) − S⁻¹B_i^{j+1}S‖` over interior nodes, all channels and `j < j_max`,
/// the left side differentiated by cubic splines through the node values.
pub fn bracket_identity_residual(sys: &BilinearSystem, grid: &TimeGrid, j_max: usize) -> Result<f64> {
    let fs = propagate_fundamental(sys, grid)?;
    let times = grid.nodes();
    let seq = bracket_sequence(sys, &times, j_max)?;
    let n = sys.dim();
    let lo = BOUNDARY_BAND.min(times.len() / 4);
    let hi = times.len() - lo;
    let mut worst: f64 = 0.0;
    for i in 0..sys.k() {
        for j in 0..j_max {
            let conj = |idx: usize, level: usize| &fs.inverses[idx] * seq.get(idx, i, level) * fs.samples[idx].mat();
            let left: Vec<Mat> = (0..times.len()).map(|idx| conj(idx, j)).collect();
            let splines: Vec<CubicSpline> = (0..n * n)
                .map(|e| CubicSpline::new(times.clone(), left.iter().map(|m| m[(e / n, e % n)]).collect()))
                .collect::<Result<_>>()?;
            for idx in lo..hi {
                let d = Mat::from_fn(n, n, |r, c| splines[r * n + c].eval(times[idx], 1));
                worst = worst.max((d - conj(idx, j + 1)).norm());
            }
        }
    }
    Ok(worst)
}
