use serde::{Deserialize, Serialize};

use super::sequence::{restricted_norm, splittings_along_orbit, PeriodicSymplecticSequence, Splitting};
use crate::error::{Error, Result};

/// Largest block length scanned by [`smallest_dominating_block`].
pub const MAX_BLOCK: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationReport {
    pub m_steps: usize,
    pub delta: f64,
    /// `‖Φ|E^s_j‖ · ‖Φ⁻¹|E^u_{j+m}‖` for each base index of one period.
    pub products: Vec<f64>,
    pub worst: f64,
    pub dominated: bool,
}

/// `‖Φ_m(j)|E^s_j‖·‖Φ_m(j)⁻¹|E^u_{j+m}‖ ≤ δ` at every index, with `Φ_m(j) = ψ_{j+m−1}⋯ψ_j`.
pub fn domination_check(
    seq: &PeriodicSymplecticSequence,
    splittings: &[Splitting],
    m_steps: usize,
    delta: f64,
) -> Result<DominationReport> {
    let n = seq.period();
    if m_steps == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    if splittings.len() != n {
        return Err(Error::Dimension(format!("{} splittings for period {n}", splittings.len())));
    }
    let m = seq.m();
    if let Some(bad) = splittings.iter().find(|s| s.stable.ncols() != m || s.unstable.ncols() != m) {
        return Err(Error::Dimension(format!(
            "splitting at index {} has dimensions ({}, {}), expected ({m}, {m})",
            bad.index,
            bad.stable.ncols(),
            bad.unstable.ncols()
        )));
    }
    let products: Vec<f64> = (0..n)
        .map(|j| block_product(seq, splittings, j, m_steps))
        .collect::<Result<_>>()?;
    let worst = products.iter().copied().fold(0.0, f64::max);
    Ok(DominationReport { m_steps, delta, dominated: worst <= delta, worst, products })
}

fn block_norms(seq: &PeriodicSymplecticSequence, splittings: &[Splitting], j: usize, m_steps: usize) -> Result<(f64, f64)> {
    let n = seq.period();
    let phi = seq.block(j, m_steps);
    let inv = phi.clone().try_inverse().ok_or_else(|| Error::Verification("singular block product".into()))?;
    let s = restricted_norm(&phi, &splittings[j % n].stable);
    let u = restricted_norm(&inv, &splittings[(j + m_steps) % n].unstable);
    Ok((s, u))
}

fn block_product(seq: &PeriodicSymplecticSequence, splittings: &[Splitting], j: usize, m_steps: usize) -> Result<f64> {
    block_norms(seq, splittings, j, m_steps).map(|(s, u)| s * u)
}

/// Per-sequence data behind the uniform hyperbolicity bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManeMember {
    pub period: usize,
    /// `‖Φ_m(mj)|E^s‖`, j = 0, 1, … over the fitting window.
    pub stable_norms: Vec<f64>,
    /// `‖Φ_m(mj)⁻¹|E^u‖` over the same window.
    pub unstable_norms: Vec<f64>,
    /// Least-squares rate of the cumulative products.
    pub fitted_rate: f64,
    /// Largest single-block domination product.
    pub domination: f64,
    pub birkhoff_stable: f64,
    pub birkhoff_unstable: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManeReport {
    pub m_steps: usize,
    pub members: Vec<ManeMember>,
    /// Smallest `λ` for which the product and domination bounds hold family-wide.
    pub lambda: f64,
    /// Smallest `K` for which the cumulative bounds hold with this `λ`.
    pub k_const: f64,
    pub items: [bool; 3],
    pub pass: bool,
}

fn least_squares_slope(ys: &[f64]) -> f64 {
    let n = ys.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = ys.iter().sum::<f64>() / n;
    let (num, den) = ys.iter().enumerate().fold((0.0, 0.0), |(a, b), (k, y)| {
        let dx = k as f64 - xm;
        (a + dx * (y - ym), b + dx * dx)
    });
    if den == 0.0 { 0.0 } else { num / den }
}

fn member_data(seq: &PeriodicSymplecticSequence, m_steps: usize) -> Result<ManeMember> {
    let splits = splittings_along_orbit(seq)?;
    let n = seq.period();
    // Block starts mj repeat with period n / gcd(n, m); fit over several repetitions.
    let cycle = n / num_integer::gcd(n, m_steps);
    let window = (8 * cycle).max(16);
    let (mut stable_norms, mut unstable_norms) = (Vec::with_capacity(window), Vec::with_capacity(window));
    for j in 0..window {
        let (s, u) = block_norms(seq, &splits, m_steps * j, m_steps)?;
        stable_norms.push(s);
        unstable_norms.push(u);
    }
    let cumulative = |v: &[f64]| -> Vec<f64> {
        let mut acc = 0.0;
        std::iter::once(0.0).chain(v.iter().map(|x| { acc += x.ln(); acc })).collect()
    };
    let rate = least_squares_slope(&cumulative(&stable_norms)).max(least_squares_slope(&cumulative(&unstable_norms))).exp();
    let domination = (0..n)
        .map(|j| block_product(seq, &splits, j, m_steps))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mean_log = |v: &[f64]| v[..cycle].iter().map(|x| x.ln()).sum::<f64>() / cycle as f64;
    Ok(ManeMember {
        period: n,
        fitted_rate: rate,
        domination,
        birkhoff_stable: mean_log(&stable_norms),
        birkhoff_unstable: mean_log(&unstable_norms),
        stable_norms,
        unstable_norms,
    })
}

/// Fits `K`, `λ` in the three uniform bounds over a family of periodic sequences.
pub fn mane_exponents(family: &[PeriodicSymplecticSequence], m_steps: usize) -> Result<ManeReport> {
    if family.is_empty() {
        return Err(Error::InvalidInput("empty family".into()));
    }
    if m_steps == 0 {
        return Err(Error::InvalidInput("block length must be positive".into()));
    }
    let members = family.iter().map(|s| member_data(s, m_steps)).collect::<Result<Vec<_>>>()?;
    let lambda = members.iter().map(|m| m.fitted_rate.max(m.domination)).fold(0.0, f64::max);
    let mut k_const: f64 = 1.0;
    for mem in &members {
        for norms in [&mem.stable_norms, &mem.unstable_norms] {
            let mut log_prod = 0.0;
            for (k, x) in norms.iter().enumerate() {
                log_prod += x.ln();
                k_const = k_const.max((log_prod - (k + 1) as f64 * lambda.ln()).exp());
            }
        }
    }
    let item1 = lambda < 1.0 && k_const.is_finite();
    let item2 = lambda < 1.0 && members.iter().all(|m| m.domination <= lambda);
    let item3 = members.iter().all(|m| m.birkhoff_stable < 0.0 && m.birkhoff_unstable < 0.0);
    Ok(ManeReport { m_steps, members, lambda, k_const, items: [item1, item2, item3], pass: item1 && item2 && item3 })
}

/// Smallest block length in `1..=max_m` for which [`mane_exponents`] passes.
pub fn smallest_dominating_block(family: &[PeriodicSymplecticSequence], max_m: usize) -> Result<Option<ManeReport>> {
    for m_steps in 1..=max_m {
        let report = mane_exponents(family, m_steps)?;
        if report.pass {
            return Ok(Some(report));
        }
    }
    Ok(None)
}

