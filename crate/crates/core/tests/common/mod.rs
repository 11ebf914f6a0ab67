#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sympsteer::symplectic::{hamiltonian_exp, random_hamiltonian, Mat, SymplecticMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `exp(s·H)` for a random unit Hamiltonian `H`.
pub fn random_symplectic(m: usize, scale: f64, rng: &mut ChaCha8Rng) -> SymplecticMatrix {
    hamiltonian_exp(&random_hamiltonian(m, rng), scale, 1e-8).unwrap()
}

pub fn mat(rows: usize, data: &[f64]) -> Mat {
    DMatrix::from_row_slice(rows, data.len() / rows, data)
}

/// Scaling-and-squaring Taylor exponential, independent of nalgebra's Padé.
pub fn expm_oracle(a: &Mat) -> Mat {
    let n = a.nrows();
    let norm = a.norm();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let b = a / 2f64.powi(s);
    let mut term = Mat::identity(n, n);
    let mut sum = Mat::identity(n, n);
    for k in 1..30 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// `X̄·exp(sH)` with `s` tuned so that `|target − X̄|_F = δ` to a few digits.
pub fn target_at(xbar: &SymplecticMatrix, delta: f64, seed: u64) -> Mat {
    let h = random_hamiltonian(xbar.m(), &mut rng(seed));
    let mut s = delta / (xbar.mat() * &h).norm();
    let mut x = xbar.mat() * expm_oracle(&(&h * s));
    for _ in 0..3 {
        s *= delta / (&x - xbar.mat()).norm();
        x = xbar.mat() * expm_oracle(&(&h * s));
    }
    x
}
