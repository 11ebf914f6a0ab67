//! Conformal bumps realising a prescribed linearized Poincaré map.
//!
//! A geodesic window free of self-intersections is chosen, the Jacobi control system is
//! steered on that window, and the resulting control is encoded as the transverse Hessian of
//! a conformal factor `σ` supported in a thin cylinder around the axis.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{ControlBasis, ControlNorms, ControlSignal, TimeGrid};
use crate::error::{Error, Result};
use crate::geodesic::{assemble_update, build_system, channel_count, channel_pairs, curvature_update, jacobi_propagate_on, CurvatureProfile, PoincareMap};
use crate::steering::{steer, SteeringOptions, SteeringProblem};
use crate::symplectic::{Mat, SymplecticMatrix};

/// Time window along the geodesic chosen by the pigeonhole argument.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicWindow {
    pub t_final: f64,
    pub r_g: f64,
    pub self_intersections: Vec<(f64, f64)>,
    pub k: usize,
    /// `N(k) = k(k−1)/2`.
    pub n_intervals: usize,
    /// Index of the chosen interval.
    pub index: usize,
    pub t_bar: f64,
    pub tau: f64,
    pub rho_bar: f64,
}

/// `N(k) = k(k − 1)/2`.
pub fn pigeonhole_count(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Lowest-index interval `[iτ, (i+1)τ] ⊆ [0, T]` free of intersection times,
/// `τ = k·r_g/N(k)` with `k = max(⌈T/r_g⌉, 2)`.
pub fn select_window(t_final: f64, r_g: f64, self_intersections: &[(f64, f64)]) -> Result<GeodesicWindow> {
    if !(t_final > 0.0 && r_g > 0.0) {
        return Err(Error::InvalidInput(format!("need T > 0 and r_g > 0, got T = {t_final}, r_g = {r_g}")));
    }
    let k = ((t_final / r_g).ceil() as usize).max(2);
    let n = pigeonhole_count(k);
    let tau = k as f64 * r_g / n as f64;
    let times: Vec<f64> = self_intersections.iter().flat_map(|&(a, b)| [a, b]).collect();
    let usable = (0..n).take_while(|&i| (i + 1) as f64 * tau <= t_final * (1.0 + 1e-12));
    for index in usable {
        let lo = index as f64 * tau;
        let hi = lo + tau;
        if times.iter().any(|&s| (lo..=hi).contains(&s)) {
            continue;
        }
        let gap = times.iter().map(|&s| if s < lo { lo - s } else { s - hi }).fold(f64::INFINITY, f64::min);
        let rho_bar = (0.5 * gap).min(0.5 * r_g);
        return Ok(GeodesicWindow {
            t_final,
            r_g,
            self_intersections: self_intersections.to_vec(),
            k,
            n_intervals: n,
            index,
            t_bar: lo,
            tau,
            rho_bar,
        });
    }
    Err(Error::Inconsistent(format!(
        "{} intersection times block every one of the {n} windows of length {tau:.4}",
        times.len()
    )))
}

/// `Q(λ)`: 1 on `[0, 1/3]`, 0 on `[2/3, ∞)`, quintic smoothstep in between.
pub fn cutoff_q(lambda: f64) -> f64 {
    cutoff_q_derivative(lambda, 0)
}

/// `Q⁽ʳ⁾(λ)` for `r ≤ 2`.
pub fn cutoff_q_derivative(lambda: f64, order: usize) -> f64 {
    if lambda <= 1.0 / 3.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if lambda >= 2.0 / 3.0 {
        return 0.0;
    }
    let s = 3.0 * lambda - 1.0;
    match order {
        0 => 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s),
        1 => -3.0 * 30.0 * s * s * (1.0 - s) * (1.0 - s),
        2 => -9.0 * 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s),
        _ => f64::NAN,
    }
}

/// `P_ij(y) = y_i y_j Q(|y|)` for `i ≠ j`, `y_i²/2 · Q(|y|)` for `i = j` (0-based, `i ≤ j`).
pub fn bump_p(i: usize, j: usize, y: &[f64]) -> Result<f64> {
    if i > j || j >= y.len() {
        return Err(Error::InvalidInput(format!("bump index ({i}, {j}) out of range for dimension {}", y.len())));
    }
    Ok(bump_unchecked(i, j, y))
}

fn bump_unchecked(i: usize, j: usize, y: &[f64]) -> f64 {
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let q = cutoff_q(r);
    if q == 0.0 {
        return 0.0;
    }
    if i == j {
        0.5 * y[i] * y[i] * q
    } else {
        y[i] * y[j] * q
    }
}

/// Data of the conformal factor `σ^{ρ,u}` in Fermi coordinates `(t, x)`, `t ∈ [0, τ]`.
#[derive(Debug, Clone)]
pub struct FermiBumpSpec {
    pub m: usize,
    pub rho: f64,
    pub tau: f64,
    /// `m(m+1)/2` channels, supported in `(0, τ)`.
    pub u: ControlSignal,
}

impl FermiBumpSpec {
    pub fn new(m: usize, rho: f64, tau: f64, u: ControlSignal) -> Result<Self> {
        if u.k() != channel_count(m) {
            return Err(Error::Dimension(format!("{} channels for m = {m}", u.k())));
        }
        if !(rho > 0.0 && tau > 0.0) {
            return Err(Error::InvalidInput("ρ and τ must be positive".into()));
        }
        Ok(Self { m, rho, tau, u })
    }

    /// `σ(t, x) = ρ² Σ_{i≤j} c_ij u_ij(t) P_ij(x/ρ)` with `c_ii = 2`, `c_ij = 1`, so the transverse
    /// Hessian on the axis is `Σ u_ij E(ij)`.
    pub fn sigma(&self, t: f64, x: &[f64]) -> f64 {
        let u = self.u.value(t);
        self.sigma_with(&u, x)
    }

    fn sigma_with(&self, u: &DVector<f64>, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v / self.rho).collect();
        if y.iter().map(|v| v * v).sum::<f64>() >= 4.0 / 9.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for (c, (i, j)) in channel_pairs(self.m).into_iter().enumerate() {
            let weight = if i == j { 2.0 } else { 1.0 };
            s += weight * u[c] * bump_unchecked(i, j, &y);
        }
        self.rho * self.rho * s
    }

    /// Central-difference transverse Hessian of `σ` at `(t, 0)` with step `h`.
    pub fn axis_hessian(&self, t: f64, h: f64) -> Mat {
        let m = self.m;
        let u = self.u.value(t);
        let at = |offsets: &[(usize, f64)]| {
            let mut x = vec![0.0; m];
            for &(i, v) in offsets {
                x[i] += v;
            }
            self.sigma_with(&u, &x)
        };
        let s0 = at(&[]);
        Mat::from_fn(m, m, |i, j| {
            if i == j {
                (at(&[(i, h)]) - 2.0 * s0 + at(&[(i, -h)])) / (h * h)
            } else {
                (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)]) + at(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            }
        })
    }

    /// Channels read back from the axis Hessian.
    pub fn recovered_control(&self, h: f64) -> ControlSignal {
        let spec = self.clone();
        let pairs = channel_pairs(self.m);
        ControlSignal::analytic(pairs.len(), move |t| {
            let hess = spec.axis_hessian(t, h);
            DVector::from_iterator(
                pairs.len(),
                pairs.iter().map(|&(i, j)| if i == j { 0.5 * hess[(i, i)] } else { hess[(i, j)] }),
            )
        })
    }
}

/// Grid sizes for [`sigma_field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldResolution {
    pub axis_nodes: usize,
    /// Requested transverse spacing; rounded so that `ρ/h_x` is an integer.
    pub h_x: f64,
}

impl FieldResolution {
    /// `h_x = ρ/64`.
    pub fn default_for(rho: f64) -> Self {
        Self { axis_nodes: 65, h_x: rho / 64.0 }
    }
}

/// `σ` sampled on `t ∈ [0, τ]` × `[−ρ, ρ]^m`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformalFactorGrid {
    pub m: usize,
    pub rho: f64,
    pub axis: Vec<f64>,
    pub h_x: f64,
    /// Points per transverse direction (odd; the middle one is the axis).
    pub per_dim: usize,
    /// `values[a * per_dim^m + flat(x)]`, transverse index row-major.
    pub values: Vec<f64>,
    pub norms: ControlNorms,
}

impl ConformalFactorGrid {
    pub fn slice_len(&self) -> usize {
        self.per_dim.pow(self.m as u32)
    }

    pub fn x_of(&self, idx: usize) -> Vec<f64> {
        let half = (self.per_dim / 2) as f64;
        let mut rest = idx;
        let mut x = vec![0.0; self.m];
        for d in (0..self.m).rev() {
            x[d] = (rest % self.per_dim) as f64 - half;
            rest /= self.per_dim;
        }
        x.iter().map(|v| v * self.h_x).collect()
    }

    pub fn value(&self, axis_index: usize, idx: usize) -> f64 {
        self.values[axis_index * self.slice_len() + idx]
    }

    /// Transverse index of the axis point.
    pub fn center(&self) -> usize {
        let half = self.per_dim / 2;
        (0..self.m).fold(0, |acc, _| acc * self.per_dim + half)
    }

    fn stride(&self, d: usize) -> usize {
        self.per_dim.pow((self.m - 1 - d) as u32)
    }
}

/// Evaluate `σ^{ρ,u}` on a grid and its C² norm by central differences.
pub fn sigma_field(spec: &FermiBumpSpec, resolution: FieldResolution) -> Result<ConformalFactorGrid> {
    if resolution.h_x > spec.rho / 8.0 {
        return Err(Error::InvalidInput(format!("h_x = {:.3e} is coarser than ρ/8 = {:.3e}", resolution.h_x, spec.rho / 8.0)));
    }
    if resolution.axis_nodes < 3 {
        return Err(Error::InvalidInput("need at least 3 axis nodes".into()));
    }
    let half = (spec.rho / resolution.h_x).round() as usize;
    let per_dim = 2 * half + 1;
    let h_x = spec.rho / half as f64;
    let axis: Vec<f64> =
        (0..resolution.axis_nodes).map(|a| spec.tau * a as f64 / (resolution.axis_nodes - 1) as f64).collect();
    let mut grid = ConformalFactorGrid {
        m: spec.m,
        rho: spec.rho,
        axis: axis.clone(),
        h_x,
        per_dim,
        values: Vec::new(),
        norms: ControlNorms { l2: 0.0, c0: 0.0, c1: 0.0, c2: 0.0 },
    };
    let slice = grid.slice_len();
    let xs: Vec<Vec<f64>> = (0..slice).map(|i| grid.x_of(i)).collect();
    grid.values = axis
        .par_iter()
        .flat_map_iter(|&t| {
            let u = spec.u.value(t);
            xs.iter().map(move |x| spec.sigma_with(&u, x)).collect::<Vec<_>>()
        })
        .collect();
    grid.norms = grid_norms(&grid);
    Ok(grid)
}

/// Sup norms of `σ`, its gradient and Hessian over interior grid points; `l2` is the
/// discrete L² norm.
fn grid_norms(g: &ConformalFactorGrid) -> ControlNorms {
    let slice = g.slice_len();
    let ht = g.axis[1] - g.axis[0];
    let hx = g.h_x;
    let nt = g.axis.len();
    let m = g.m;
    let interior = |idx: usize| (0..m).all(|d| {
        let c = (idx / g.stride(d)) % g.per_dim;
        c > 0 && c + 1 < g.per_dim
    });
    // Offsets: direction 0 is time, 1..=m transverse.
    let step = |d: usize| if d == 0 { slice as isize } else { g.stride(d - 1) as isize };
    let h = |d: usize| if d == 0 { ht } else { hx };
    let v = |p: isize| g.values[p as usize];
    let (c0, d1, d2, l2) = (1..nt - 1)
        .into_par_iter()
        .map(|a| {
            let mut c0: f64 = 0.0;
            let mut d1: f64 = 0.0;
            let mut d2: f64 = 0.0;
            let mut l2 = 0.0;
            for idx in 0..slice {
                let p = (a * slice + idx) as isize;
                let s = v(p);
                c0 = c0.max(s.abs());
                l2 += s * s;
                if !interior(idx) {
                    continue;
                }
                for d in 0..=m {
                    let sd = step(d);
                    d1 = d1.max(((v(p + sd) - v(p - sd)) / (2.0 * h(d))).abs());
                    d2 = d2.max(((v(p + sd) - 2.0 * s + v(p - sd)) / (h(d) * h(d))).abs());
                    for e in (d + 1)..=m {
                        let se = step(e);
                        let mixed = (v(p + sd + se) - v(p + sd - se) - v(p - sd + se) + v(p - sd - se)) / (4.0 * h(d) * h(e));
                        d2 = d2.max(mixed.abs());
                    }
                }
            }
            (c0, d1, d2, l2)
        })
        .reduce(|| (0.0, 0.0, 0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1), x.2.max(y.2), x.3 + y.3));
    let cell = ht * hx.powi(m as i32);
    ControlNorms { l2: (l2 * cell).sqrt(), c0, c1: c0 + d1, c2: c0 + d1 + d2 }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub item: usize,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalPropertiesReport {
    pub checks: Vec<PropertyCheck>,
    /// Fitted `‖σ‖_{C²}/‖u‖_{C²}`.
    pub c2_ratio: f64,
    pub pass: bool,
}

impl LocalPropertiesReport {
    /// Error naming the first failed item.
    pub fn into_result(self) -> Result<Self> {
        match self.checks.iter().find(|c| !c.pass) {
            Some(c) => Err(Error::Verification(format!(
                "item ({}) {}: {:.3e} exceeds {:.1e}",
                c.item, c.name, c.value, c.tolerance
            ))),
            None => Ok(self),
        }
    }
}

pub const AXIS_TOL: f64 = 1e-10;
pub const HESSIAN_TOL: f64 = 1e-4;

/// `max_ij c_ij ‖P_ij‖_{C²}` sampled on `[−2/3, 2/3]^m`, times the channel count.
pub fn bump_c2_constant(m: usize) -> f64 {
    let n: usize = if m <= 2 { 41 } else { 13 };
    let h = 1e-4;
    let pts: Vec<Vec<f64>> = (0..n.pow(m as u32))
        .map(|mut idx| {
            let mut y = vec![0.0; m];
            for d in (0..m).rev() {
                y[d] = -2.0 / 3.0 + (4.0 / 3.0) * (idx % n) as f64 / (n - 1) as f64;
                idx /= n;
            }
            y
        })
        .collect();
    let shifted = |y: &[f64], d: usize, s: f64| {
        let mut z = y.to_vec();
        z[d] += s;
        z
    };
    let mut best: f64 = 0.0;
    for (i, j) in channel_pairs(m) {
        let w = if i == j { 2.0 } else { 1.0 };
        let p = |y: &[f64]| w * bump_unchecked(i, j, y);
        let (mut c0, mut c1, mut c2): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for y in &pts {
            c0 = c0.max(p(y).abs());
            for d in 0..m {
                c1 = c1.max(((p(&shifted(y, d, h)) - p(&shifted(y, d, -h))) / (2.0 * h)).abs());
                for e in 0..m {
                    let pp = shifted(&shifted(y, d, h), e, h);
                    let pm = shifted(&shifted(y, d, h), e, -h);
                    let mp = shifted(&shifted(y, d, -h), e, h);
                    let mm = shifted(&shifted(y, d, -h), e, -h);
                    c2 = c2.max(((p(&pp) - p(&pm) - p(&mp) + p(&mm)) / (4.0 * h * h)).abs());
                }
            }
        }
        best = best.max(c0 + c1 + c2);
    }
    best * channel_count(m) as f64
}

/// Items (1)–(6): support, axis value, gradient, mixed Hessian, transverse Hessian, C² bound.
pub fn verify_local_properties(field: &ConformalFactorGrid, spec: &FermiBumpSpec) -> LocalPropertiesReport {
    let m = field.m;
    let slice = field.slice_len();
    let center = field.center();
    let hx = field.h_x;
    let ht = field.axis[1] - field.axis[0];

    let mut support: f64 = 0.0;
    for (p, &v) in field.values.iter().enumerate() {
        if v != 0.0 {
            let r = field.x_of(p % slice).iter().map(|x| x * x).sum::<f64>().sqrt();
            if r >= field.rho {
                support += 1.0;
            }
        }
    }
    let mut axis_value: f64 = 0.0;
    let mut gradient: f64 = 0.0;
    let mut mixed: f64 = 0.0;
    let mut hessian: f64 = 0.0;
    for (a, &t) in field.axis.iter().enumerate() {
        axis_value = axis_value.max(field.value(a, center).abs());
        for d in 0..m {
            let s = field.stride(d);
            let g = (field.value(a, center + s) - field.value(a, center - s)) / (2.0 * hx);
            gradient = gradient.max(g.abs());
            if a > 0 && a + 1 < field.axis.len() {
                let mx = (field.value(a + 1, center + s) - field.value(a + 1, center - s) - field.value(a - 1, center + s)
                    + field.value(a - 1, center - s))
                    / (4.0 * ht * hx);
                mixed = mixed.max(mx.abs());
            }
        }
        if a > 0 && a + 1 < field.axis.len() {
            let gt = (field.value(a + 1, center) - field.value(a - 1, center)) / (2.0 * ht);
            gradient = gradient.max(gt.abs());
        }
        let expected = assemble_update(m, spec.u.value(t).as_slice());
        let fd = Mat::from_fn(m, m, |i, j| {
            let (si, sj) = (field.stride(i), field.stride(j));
            if i == j {
                (field.value(a, center + si) - 2.0 * field.value(a, center) + field.value(a, center - si)) / (hx * hx)
            } else {
                (field.value(a, center + si + sj) - field.value(a, center + si - sj) - field.value(a, center - si + sj)
                    + field.value(a, center - si - sj))
                    / (4.0 * hx * hx)
            }
        });
        hessian = hessian.max((fd - expected).abs().max());
    }
    let u_c2 = spec.u.norms(spec.tau).c2;
    let c2_ratio = if u_c2 > 0.0 { field.norms.c2 / u_c2 } else { 0.0 };
    let bound = bump_c2_constant(m);
    let mk = |item: usize, name: &str, value: f64, tolerance: f64| PropertyCheck {
        item,
        name: name.into(),
        value,
        tolerance,
        pass: value <= tolerance,
    };
    let checks = vec![
        mk(1, "nonzero values outside the cylinder", support, 0.0),
        mk(2, "σ vanishes on the axis", axis_value, AXIS_TOL),
        mk(3, "gradient vanishes on the axis", gradient, AXIS_TOL),
        mk(4, "mixed (t, x) Hessian vanishes on the axis", mixed, AXIS_TOL),
        mk(5, "transverse Hessian equals the control", hessian, HESSIAN_TOL),
        mk(6, "‖σ‖_C² / ‖u‖_C² below the bump constant", c2_ratio, bound),
    ];
    let pass = checks.iter().all(|c| c.pass);
    LocalPropertiesReport { checks, c2_ratio, pass }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FranksOptions {
    pub steering: SteeringOptions,
    pub resolution: Option<FieldResolution>,
    /// Agreement required between the two routes to the perturbed map.
    pub route_tol: f64,
}

impl Default for FranksOptions {
    fn default() -> Self {
        Self { steering: SteeringOptions::default(), resolution: None, route_tol: 1e-7 }
    }
}

#[derive(Debug, Clone)]
pub struct FranksSynthesis {
    pub spec: FermiBumpSpec,
    pub field: ConformalFactorGrid,
    pub report: LocalPropertiesReport,
    /// Steered route: `P_post · E(u) · P_pre`.
    pub achieved: PoincareMap,
    /// `curvature_update(R, u read from σ)` pushed through the Jacobi equation.
    pub achieved_via_sigma: PoincareMap,
    pub route_gap: f64,
    /// `|A − P_g(γ)(T)|_F`.
    pub delta: f64,
    pub residual: f64,
    pub u_norms: ControlNorms,
    /// `‖σ‖_{C²}/√δ`.
    pub sigma_ratio: f64,
}

/// Realise `target` as the Poincaré map of `R` perturbed by a conformal bump in `window`.
pub fn synthesize_franks(
    r: &CurvatureProfile,
    window: &GeodesicWindow,
    target: &SymplecticMatrix,
    rho: f64,
    options: &FranksOptions,
) -> Result<FranksSynthesis> {
    let m = r.m();
    if target.m() != m {
        return Err(Error::Dimension("target does not match the curvature dimension".into()));
    }
    if rho > window.rho_bar {
        return Err(Error::InvalidInput(format!("ρ = {rho} exceeds ρ̄ = {}", window.rho_bar)));
    }
    let t_final = window.t_final;
    let (t0, tau) = (window.t_bar, window.tau);
    let segment = |start: f64, len: f64| -> Result<SymplecticMatrix> {
        if len <= 1e-14 {
            return Ok(SymplecticMatrix::identity(m));
        }
        Ok(jacobi_propagate_on(&r.shifted(start), &TimeGrid::with_default_steps(len)?)?.matrix)
    };
    let pre = segment(0.0, t0)?;
    let post = segment(t0 + tau, t_final - t0 - tau)?;
    let r_window = r.shifted(t0);
    let grid = TimeGrid::with_default_steps(tau)?;
    let sys = build_system(&r_window)?;
    let window_map = jacobi_propagate_on(&r_window, &grid)?.matrix;
    let unperturbed = post.mul(&window_map)?.mul(&pre)?;
    let delta = unperturbed.distance(target.mat());

    // A ↦ P_post⁻¹ · A · P_pre⁻¹
    let conjugated = post.inverse() * target.mat() * pre.inverse();
    let basis = Arc::new(ControlBasis::windowed_legendre(tau, sys.k())?);
    let problem = SteeringProblem::with_basis(sys, SymplecticMatrix::identity(m), conjugated, grid, basis)?
        .with_options(options.steering);
    let solution = steer(&problem)?;

    let spec = FermiBumpSpec::new(m, rho, tau, solution.u.clone())?;
    let resolution = options.resolution.unwrap_or_else(|| FieldResolution::default_for(rho));
    let field = sigma_field(&spec, resolution)?;
    let report = verify_local_properties(&field, &spec);

    let steered = crate::control::end_point(&problem.sys, &solution.u, &problem.x0, &grid)?;
    let achieved = post.mul(&steered)?.mul(&pre)?;
    let recovered = spec.recovered_control(field.h_x);
    let via_sigma = jacobi_propagate_on(&curvature_update(&r_window, &recovered)?, &grid)?.matrix;
    let achieved_via_sigma = post.mul(&via_sigma)?.mul(&pre)?;
    let route_gap = achieved.distance(achieved_via_sigma.mat());
    if route_gap > options.route_tol {
        return Err(Error::Verification(format!("routes to P_h differ by {route_gap:.3e}")));
    }
    let residual = achieved.distance(target.mat());
    let sigma_ratio = if delta > 0.0 { field.norms.c2 / delta.sqrt() } else { 0.0 };
    Ok(FranksSynthesis {
        spec,
        report,
        achieved: PoincareMap { matrix: achieved, horizon: t_final },
        achieved_via_sigma: PoincareMap { matrix: achieved_via_sigma, horizon: t_final },
        route_gap,
        delta,
        residual,
        u_norms: solution.norms,
        sigma_ratio,
        field,
    })
}
