//! Local inversion of the End-Point map near `X̄(T)`.
//!
//! [`steer`] runs damped Gauss–Newton on the frame coordinates of `E(u) − X̄(T)`. When the
//! first differential loses rank it first calls [`second_order_corrector`], which reaches the
//! annihilator components of the target through the kernel quadratic form.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::appendix::{self, PolyPair};
use crate::control::{
    basis_jacobian, bracket_sequence, directional_hessians, end_point, kernel_coefficients, qdelta_with,
    second_differential, BilinearSystem, ControlBasis, ControlNorms, ControlSignal, TimeGrid,
};
use crate::error::{Error, Result};
use crate::linalg::RankedSvd;
use crate::symplectic::{hamiltonian_exp, random_hamiltonian, sp_basis, Mat, SymplecticMatrix, SymplecticTangent, TangentFrame};

/// Relative singular-value cut below which a direction of `D₀E` counts as missing.
pub const CORANK_TOL: f64 = 1e-8;
pub const DEFAULT_TRUST_RADIUS: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringOptions {
    pub residual_tol: f64,
    pub max_iter: usize,
    pub trust_radius: f64,
    /// Armijo backtracking factor.
    pub backtrack: f64,
    pub min_step: f64,
}

impl Default for SteeringOptions {
    fn default() -> Self {
        Self { residual_tol: 1e-6, max_iter: 200, trust_radius: DEFAULT_TRUST_RADIUS, backtrack: 0.5, min_step: 1e-6 }
    }
}

#[derive(Debug, Clone)]
pub struct SteeringProblem {
    pub sys: BilinearSystem,
    pub x0: SymplecticMatrix,
    pub target: SymplecticMatrix,
    pub grid: TimeGrid,
    pub basis: Arc<ControlBasis>,
    pub options: SteeringOptions,
}

impl SteeringProblem {
    /// Validates the target against the system tolerance; uses the windowed Legendre basis.
    pub fn new(sys: BilinearSystem, x0: SymplecticMatrix, target: Mat, grid: TimeGrid) -> Result<Self> {
        let basis = Arc::new(ControlBasis::windowed_legendre(grid.t_final(), sys.k())?);
        Self::with_basis(sys, x0, target, grid, basis)
    }

    pub fn with_basis(
        sys: BilinearSystem,
        x0: SymplecticMatrix,
        target: Mat,
        grid: TimeGrid,
        basis: Arc<ControlBasis>,
    ) -> Result<Self> {
        if x0.dim() != sys.dim() || target.nrows() != sys.dim() {
            return Err(Error::Dimension("initial state or target does not match the system".into()));
        }
        if basis.channels() != sys.k() || (basis.t_final() - grid.t_final()).abs() > 1e-12 {
            return Err(Error::Dimension("basis does not match the system or horizon".into()));
        }
        let target = SymplecticMatrix::new(target, sys.tol())?;
        Ok(Self { sys, x0, target, grid, basis, options: SteeringOptions::default() })
    }

    pub fn with_options(mut self, options: SteeringOptions) -> Self {
        self.options = options;
        self
    }

    /// Uncontrolled end point `X̄(T)`.
    pub fn reference(&self) -> Result<SymplecticMatrix> {
        end_point(&self.sys, &ControlSignal::zero(self.sys.k()), &self.x0, &self.grid)
    }

    /// `|target − X̄(T)|_F`.
    pub fn distance(&self) -> Result<f64> {
        Ok(self.reference()?.distance(self.target.mat()))
    }

    fn signal(&self, coeffs: DVector<f64>) -> ControlSignal {
        ControlSignal::Basis { basis: self.basis.clone(), coeffs }
    }

    fn end_at(&self, coeffs: &DVector<f64>) -> Result<SymplecticMatrix> {
        end_point(&self.sys, &self.signal(coeffs.clone()), &self.x0, &self.grid)
    }

    /// Frame coordinates of `E(c) − anchor` and of every `∂E/∂c_b`.
    fn linearize(&self, frame: &TangentFrame, coeffs: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>, f64)> {
        let (end, jac) = basis_jacobian(&self.sys, &self.basis, coeffs, &self.x0, &self.grid)?;
        let f = frame.coords(&(end.mat() - frame.anchor().mat()));
        let cols: Vec<DVector<f64>> = jac.iter().map(|d| frame.coords(d)).collect();
        Ok((f, DMatrix::from_columns(&cols), end.distance(self.target.mat())))
    }
}

#[derive(Debug, Clone)]
pub struct SteeringSolution {
    pub u: ControlSignal,
    pub coefficients: DVector<f64>,
    /// `|E(u) − target|_F`.
    pub residual: f64,
    pub iterations: usize,
    pub norms: ControlNorms,
    /// Kernel component from the second-order step (zero on submersion problems).
    pub w1: ControlSignal,
    /// First Gauss–Newton correction after `w1`.
    pub w2: ControlSignal,
    /// `|w₁ − ΠₖₑᵣW₁| / |w₁|` in coefficient space.
    pub kernel_residual: f64,
    pub corank: usize,
    pub distance: f64,
    /// Residual before every Gauss–Newton iteration, then the final one.
    pub history: Vec<f64>,
}

/// Solve `E(u) = target` for `u` in the problem's control basis.
pub fn steer(problem: &SteeringProblem) -> Result<SteeringSolution> {
    let opts = problem.options;
    let nb = problem.basis.len();
    let xbar = problem.reference()?;
    let distance = xbar.distance(problem.target.mat());
    if distance > opts.trust_radius {
        return Err(Error::TrustRadius { distance, radius: opts.trust_radius });
    }
    let zero = DVector::zeros(nb);
    let frame = TangentFrame::new(&xbar);
    let z_target = frame.coords(&(problem.target.mat() - xbar.mat()));

    let mut solution = SteeringSolution {
        u: problem.signal(zero.clone()),
        coefficients: zero.clone(),
        residual: distance,
        iterations: 0,
        norms: ControlNorms { l2: 0.0, c0: 0.0, c1: 0.0, c2: 0.0 },
        w1: problem.signal(zero.clone()),
        w2: problem.signal(zero.clone()),
        kernel_residual: 0.0,
        corank: 0,
        distance,
        history: vec![distance],
    };
    if distance <= opts.residual_tol {
        return Ok(solution);
    }

    let (_, jac0, _) = problem.linearize(&frame, &zero)?;
    let svd0 = RankedSvd::new(&jac0, CORANK_TOL);
    solution.corank = frame.dim() - svd0.rank;
    let mut coeffs = zero.clone();
    if solution.corank > 0 {
        let z = SymplecticTangent { base: frame.from_coords(&z_target), anchor: xbar.clone() };
        let step = corrector_coefficients(problem, &frame, &zero, &z)?;
        solution.kernel_residual = step.kernel_residual;
        coeffs = &step.w1 + &step.w2;
        solution.w1 = problem.signal(step.w1);
        solution.w2 = problem.signal(step.w2);
    }

    let merit = |f: &DVector<f64>| (f - &z_target).norm();
    let (mut f, mut jac, mut residual) = problem.linearize(&frame, &coeffs)?;
    solution.history = vec![residual];
    let mut best = (residual, coeffs.clone());
    let mut iterations = 0;
    while residual > opts.residual_tol {
        if iterations >= opts.max_iter {
            return Err(Error::NoConvergence { iterations, best_residual: best.0 });
        }
        iterations += 1;
        let step = RankedSvd::new(&jac, 1e-12).solve(&(&z_target - &f));
        let current = merit(&f);
        let mut t = 1.0;
        let accepted = loop {
            let trial = &coeffs + &step * t;
            let (tf, tj, tr) = problem.linearize(&frame, &trial)?;
            if merit(&tf) < current || tr < residual {
                break Some((trial, tf, tj, tr));
            }
            t *= opts.backtrack;
            if t < opts.min_step {
                break None;
            }
        };
        let Some((c, nf, nj, nr)) = accepted else {
            return Err(Error::NoConvergence { iterations, best_residual: best.0 });
        };
        coeffs = c;
        f = nf;
        jac = nj;
        residual = nr;
        solution.history.push(residual);
        if residual < best.0 {
            best = (residual, coeffs.clone());
        }
    }

    let u = problem.signal(coeffs.clone());
    solution.norms = u.norms(problem.grid.t_final());
    solution.residual = problem.end_at(&coeffs)?.distance(problem.target.mat());
    solution.u = u;
    solution.coefficients = coeffs;
    solution.iterations = iterations;
    Ok(solution)
}

struct CorrectorStep {
    w1: DVector<f64>,
    w2: DVector<f64>,
    kernel_residual: f64,
}

/// Solve `½ wᵀ H_a w = z_a` for all `a` by Gauss–Newton from a spectral starting guess.
fn solve_quadratic(h: &[DMatrix<f64>], za: &DVector<f64>) -> Result<DVector<f64>> {
    let kdim = h[0].nrows();
    let zn = za.norm();
    if zn == 0.0 {
        return Ok(DVector::zeros(kdim));
    }
    let mut m = DMatrix::zeros(kdim, kdim);
    for (ha, &z) in h.iter().zip(za.iter()) {
        m += ha * (z / zn);
    }
    let eig = SymmetricEigen::new(m);
    let (imax, mu) = eig.eigenvalues.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
        if v > acc.1 {
            (i, v)
        } else {
            acc
        }
    });
    if !(mu > 0.0) {
        return Err(Error::InfeasibleSecondOrder(
            "the kernel quadratic form has no direction of the required sign".into(),
        ));
    }
    let q = |w: &DVector<f64>| DVector::from_iterator(h.len(), h.iter().map(|ha| 0.5 * w.dot(&(ha * w))));
    let mut w = eig.eigenvectors.column(imax).into_owned() * (2.0 * zn / mu).sqrt();
    if h.len() == 1 {
        return Ok(w);
    }
    for _ in 0..100 {
        let r = za - q(&w);
        if r.norm() <= 1e-13 * zn {
            return Ok(w);
        }
        let rows: Vec<_> = h.iter().map(|ha| (ha * &w).transpose()).collect();
        let jac = DMatrix::from_rows(&rows);
        w += RankedSvd::new(&jac, 1e-12).solve(&r);
    }
    let r = (za - q(&w)).norm();
    if r <= 1e-8 * zn {
        Ok(w)
    } else {
        Err(Error::InfeasibleSecondOrder(format!("quadratic annihilator system stalls at relative residual {:.2e}", r / zn)))
    }
}

fn corrector_coefficients(
    problem: &SteeringProblem,
    frame: &TangentFrame,
    base: &DVector<f64>,
    z: &SymplecticTangent,
) -> Result<CorrectorStep> {
    let nb = problem.basis.len();
    let zc = frame.coords(&z.base);
    if zc.norm() == 0.0 {
        return Ok(CorrectorStep { w1: DVector::zeros(nb), w2: DVector::zeros(nb), kernel_residual: 0.0 });
    }
    let (f0, jac, _) = problem.linearize(frame, base)?;
    let svd = RankedSvd::new(&jac, CORANK_TOL);
    let annihilator = svd.left_null();
    let kernel = svd.null();
    let w1 = if annihilator.ncols() == 0 {
        DVector::zeros(nb)
    } else {
        if kernel.ncols() == 0 {
            return Err(Error::InfeasibleSecondOrder("the first differential has a trivial kernel".into()));
        }
        let pairings: Vec<Mat> = annihilator.column_iter().map(|c| frame.from_coords(&c.into_owned())).collect();
        let h = directional_hessians(&problem.sys, &problem.basis, base, &problem.x0, &problem.grid, &kernel, &pairings)?;
        let za = annihilator.transpose() * &zc;
        &kernel * solve_quadratic(&h, &za)?
    };
    let kernel_residual = if w1.norm() > 0.0 {
        (&w1 - &kernel * (kernel.transpose() * &w1)).norm() / w1.norm()
    } else {
        0.0
    };
    let (f1, _, _) = problem.linearize(frame, &(base + &w1))?;
    let w2 = svd.solve(&(&zc + &f0 - &f1));
    Ok(CorrectorStep { w1, w2, kernel_residual })
}

/// Kernel and row-space components `(w₁, w₂)` moving `F(base)` by `z` to second order.
///
/// `z` lives in the tangent space at `E(base)`.
pub fn second_order_corrector(
    problem: &SteeringProblem,
    base: &ControlSignal,
    z: &SymplecticTangent,
) -> Result<(ControlSignal, ControlSignal)> {
    let coeffs = match base {
        ControlSignal::Zero { .. } => DVector::zeros(problem.basis.len()),
        ControlSignal::Basis { basis, coeffs }
            if basis.len() == problem.basis.len() && basis.t_final() == problem.basis.t_final() =>
        {
            coeffs.clone()
        }
        _ => return Err(Error::InvalidInput("the base control must be expressed in the problem basis".into())),
    };
    let anchor = problem.end_at(&coeffs)?;
    if anchor.distance(z.anchor.mat()) > 1e-9 * (1.0 + anchor.mat().norm()) {
        return Err(Error::InvalidInput("z must be tangent at E(base)".into()));
    }
    let frame = TangentFrame::new(&anchor);
    let step = corrector_coefficients(problem, &frame, &coeffs, z)?;
    Ok((problem.signal(step.w1), problem.signal(step.w2)))
}

/// The map `X ↦ Π(X − anchor)` on a neighbourhood of `anchor` and its inverse.
#[derive(Debug, Clone)]
pub struct LocalChart {
    frame: TangentFrame,
    radius: f64,
}

impl LocalChart {
    pub fn new(anchor: &SymplecticMatrix, radius: f64) -> Self {
        Self { frame: TangentFrame::new(anchor), radius }
    }

    pub fn anchor(&self) -> &SymplecticMatrix {
        self.frame.anchor()
    }

    pub fn forward(&self, x: &SymplecticMatrix) -> Result<SymplecticTangent> {
        let distance = self.anchor().distance(x.mat());
        if distance > self.radius {
            return Err(Error::NoLocalInverse(format!("distance {distance:.3e} exceeds radius {:.3e}", self.radius)));
        }
        Ok(SymplecticTangent { base: self.frame.project(&(x.mat() - self.anchor().mat())), anchor: self.anchor().clone() })
    }

    /// Newton iteration `X ← X·exp(Σ δᵢ Hᵢ)` on `Π(X − anchor) = z`.
    pub fn inverse(&self, z: &SymplecticTangent) -> Result<SymplecticMatrix> {
        let anchor = self.anchor();
        let target = self.frame.coords(&z.base);
        if target.norm() > self.radius {
            return Err(Error::NoLocalInverse(format!("|z| = {:.3e} exceeds radius {:.3e}", target.norm(), self.radius)));
        }
        let gens = sp_basis(anchor.m());
        let mut x = anchor.clone();
        for _ in 0..50 {
            let r = &target - self.frame.coords(&(x.mat() - anchor.mat()));
            if r.norm() <= 1e-14 * (1.0 + target.norm()) {
                return Ok(x);
            }
            let cols: Vec<DVector<f64>> = gens.iter().map(|h| self.frame.coords(&(x.mat() * h))).collect();
            let step = RankedSvd::new(&DMatrix::from_columns(&cols), 1e-12).solve(&r);
            let mut h = Mat::zeros(anchor.dim(), anchor.dim());
            for (g, s) in gens.iter().zip(step.iter()) {
                h += g * *s;
            }
            x = x.mul(&hamiltonian_exp(&h, 1.0, 1e-6)?)?;
        }
        let r = (&target - self.frame.coords(&(x.mat() - anchor.mat()))).norm();
        if r <= 1e-10 {
            Ok(x)
        } else {
            Err(Error::NoLocalInverse(format!("Newton iteration stalled at residual {r:.3e}")))
        }
    }
}

/// `Z = Π(X − anchor)` together with the Newton reconstruction of `X` from `Z`.
pub fn local_inverse_projection(
    x: &SymplecticMatrix,
    anchor: &SymplecticMatrix,
    radius: f64,
) -> Result<(SymplecticTangent, SymplecticMatrix)> {
    let chart = LocalChart::new(anchor, radius);
    let z = chart.forward(x)?;
    let back = chart.inverse(&z)?;
    Ok((z, back))
}

/// Outcome of [`negative_subspace_probe`].
#[derive(Debug, Clone)]
pub struct NegativeProbe {
    /// Channels `(ī, j̄)`.
    pub pair: (usize, usize),
    /// `tr(PᵀS(T)[B_ī¹(0), B_j̄¹(0)])`.
    pub trace: f64,
    pub delta: f64,
    pub controls: Vec<ControlSignal>,
    /// Largest `Q_δ(u) / (|u|²_{L²} δ⁴)` over the family.
    pub max_rayleigh: f64,
    /// `⟨P, D²E(u)⟩` for every family member.
    pub pairings: Vec<f64>,
    /// `1 / min (tv_ī)⊙(sv_j̄) / |v|²` over the unit sphere of the family.
    pub k_n: f64,
    /// `2·trace / (δ·K(N))`.
    pub bound: f64,
}

/// `v(t/δ)` on `[0, δ)`, zero afterwards, with `f` on channel `ī` and `g` on channel `j̄`.
pub fn rescaled_pair(k: usize, pair: (usize, usize), fg: &PolyPair, delta: f64) -> ControlSignal {
    let f = fg.f.to_f64_coeffs();
    let g = fg.g.to_f64_coeffs();
    let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, a| acc * x + a);
    ControlSignal::analytic(k, move |t| {
        let mut v = DVector::zeros(k);
        if (0.0..delta).contains(&t) {
            let x = t / delta;
            v[pair.0] = horner(&f, x);
            v[pair.1] = horner(&g, x);
        }
        v
    })
}

/// `N` pairs spanning a subspace of 𝓛: the base pair, then [`appendix::extend_space`] at
/// the smallest workable degree up to 40.
pub fn probe_family(n: usize) -> Result<Vec<PolyPair>> {
    let mut family: Vec<PolyPair> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut next = None;
        for d in 8..=40 {
            match appendix::extend_space(&family, d) {
                Ok(p) => {
                    next = Some(p);
                    break;
                }
                Err(Error::Infeasible(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        family.push(next.ok_or_else(|| Error::Infeasible(format!("no extension of a {}-dimensional family", family.len())))?);
    }
    Ok(family)
}

fn symmetric_pencil_extremes(q: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(f64, f64)> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("family controls are linearly dependent".into()))?;
    let linv = chol.l().try_inverse().ok_or_else(|| Error::InvalidInput("singular Gram matrix".into()))?;
    let sym = &linv * q * linv.transpose();
    let sym = (&sym + sym.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    Ok((eig.min(), eig.max()))
}

fn rational_gram(family: &[PolyPair], form: impl Fn(&PolyPair, &PolyPair) -> appendix::Rational) -> DMatrix<f64> {
    let n = family.len();
    DMatrix::from_fn(n, n, |a, b| {
        let v = (form(&family[a], &family[b]) + form(&family[b], &family[a])) / appendix::Rational::from_integer(2.into());
        num_traits::ToPrimitive::to_f64(&v).unwrap_or(f64::NAN)
    })
}

fn l2_pair(a: &PolyPair, b: &PolyPair) -> appendix::Rational {
    a.f.mul(&b.f).add(&a.g.mul(&b.g)).integral()
}

/// Verify a family lies in 𝓛 with all cross conditions, as the probe requires.
pub fn check_probe_family(family: &[PolyPair]) -> Result<()> {
    for (l, p) in family.iter().enumerate() {
        let report = appendix::verify_membership_l(&p.f, &p.g);
        if let Some(c) = report.equalities.iter().find(|c| !c.ok) {
            return Err(Error::InvalidInput(format!("pair {l} violates {} = {}", c.label, c.value)));
        }
        if !report.positivity.ok {
            return Err(Error::InvalidInput(format!("pair {l} has (tf)⊙(sg) = {} ≤ 0", report.positivity.value)));
        }
    }
    for a in 0..family.len() {
        for b in (a + 1)..family.len() {
            let f = family[a].f.add(&family[b].f);
            let g = family[a].g.add(&family[b].g);
            if !appendix::verify_membership_l(&f, &g).member {
                return Err(Error::InvalidInput(format!("span of pairs {a} and {b} leaves 𝓛")));
            }
        }
    }
    Ok(())
}

/// Most negative `tr(PᵀS(T)[B_ī¹(0), B_j̄¹(0)])` over ordered channel pairs.
pub fn most_negative_pair(sys: &BilinearSystem, p: &SymplecticTangent) -> Result<Option<((usize, usize), f64)>> {
    let seq = bracket_sequence(sys, &[0.0], 1)?;
    let ps = p.anchor.mat().transpose() * &p.base;
    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..sys.k() {
        for j in 0..sys.k() {
            if i == j {
                continue;
            }
            let b1i = seq.get(0, i, 1);
            let b1j = seq.get(0, j, 1);
            let tr = ps.dot(&(b1i * b1j - b1j * b1i));
            if tr < 0.0 && best.is_none_or(|(_, v)| tr < v) {
                best = Some(((i, j), tr));
            }
        }
    }
    Ok(best)
}

/// Negative subspace probe: an `N`-dimensional family of controls supported in
/// `[0, δ]` on which `⟨P, D²E⟩` is negative.
pub fn negative_subspace_probe(sys: &BilinearSystem, grid: &TimeGrid, p: &SymplecticTangent, n: usize) -> Result<NegativeProbe> {
    negative_subspace_probe_with(sys, grid, p, &probe_family(n)?)
}

/// [`negative_subspace_probe`] for a caller-supplied family of polynomial pairs.
pub fn negative_subspace_probe_with(
    sys: &BilinearSystem,
    grid: &TimeGrid,
    p: &SymplecticTangent,
    family: &[PolyPair],
) -> Result<NegativeProbe> {
    if family.is_empty() {
        return Err(Error::InvalidInput("empty probe family".into()));
    }
    check_probe_family(family)?;
    let (pair, trace) = most_negative_pair(sys, p)?
        .ok_or_else(|| Error::InfeasibleSecondOrder("no channel pair with negative bracket pairing".into()))?;
    let kc = kernel_coefficients(sys, p)?;
    let t_final = grid.t_final();

    let odot_form = rational_gram(family, |a, b| appendix::odot(&a.f.times_t(1), &b.g.times_t(1)));
    let l2 = rational_gram(family, l2_pair);
    let (odot_min, _) = symmetric_pencil_extremes(&odot_form, &l2)?;
    let k_n = 1.0 / odot_min;

    let mut delta = t_final / 4.0;
    let min_delta = t_final / 1024.0;
    while delta >= min_delta {
        let steps = grid.n_steps().max((256.0 * t_final / delta).ceil() as usize);
        let fine = TimeGrid::new(t_final, steps)?;
        let controls: Vec<ControlSignal> = family.iter().map(|fg| rescaled_pair(sys.k(), pair, fg, delta)).collect();
        let n = controls.len();
        let diag: Vec<f64> = controls.iter().map(|u| qdelta_with(&kc, delta, u)).collect();
        let mut q = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
        for a in 0..n {
            for b in (a + 1)..n {
                let sum = controls[a].combine(1.0, &controls[b], 1.0)?;
                let v = 0.5 * (qdelta_with(&kc, delta, &sum) - diag[a] - diag[b]);
                q[(a, b)] = v;
                q[(b, a)] = v;
            }
        }
        let gram = &l2 * (delta * delta.powi(4));
        let (_, max_rayleigh) = symmetric_pencil_extremes(&q, &gram)?;
        let pairings = controls
            .iter()
            .map(|u| Ok(p.base.dot(&second_differential(sys, &SymplecticMatrix::identity(sys.m()), &fine, u)?)))
            .collect::<Result<Vec<f64>>>()?;
        if max_rayleigh < 0.0 && pairings.iter().all(|&v| v < 0.0) {
            return Ok(NegativeProbe {
                pair,
                trace,
                delta,
                controls,
                max_rayleigh,
                pairings,
                k_n,
                bound: 2.0 * trace / (delta * k_n),
            });
        }
        delta *= 0.5;
    }
    Err(Error::InfeasibleSecondOrder(format!("pairing not negative for δ ≥ {min_delta:.3e}")))
}

/// The polynomial pair used for `N = 1` probes.
pub fn base_probe_pair() -> Result<PolyPair> {
    appendix::base_pair(8)
}

/// `reference · exp(sH)` for a seeded random Hamiltonian `H`, with `s` tuned so the target sits at
/// Frobenius distance `distance` from `reference`.
pub fn random_target(reference: &SymplecticMatrix, distance: f64, seed: u64) -> Result<SymplecticMatrix> {
    if !(distance >= 0.0 && distance.is_finite()) {
        return Err(Error::InvalidInput(format!("target distance must be finite and non-negative, got {distance}")));
    }
    if distance == 0.0 {
        return Ok(reference.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_hamiltonian(reference.m(), &mut rng);
    let mut s = distance / (reference.mat() * &h).norm();
    let mut x = reference.mul(&hamiltonian_exp(&h, s, 1e-10)?)?;
    for _ in 0..4 {
        s *= distance / reference.distance(x.mat());
        x = reference.mul(&hamiltonian_exp(&h, s, 1e-10)?)?;
    }
    Ok(x)
}
