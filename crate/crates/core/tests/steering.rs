mod common;

use common::{loglog_slope, random_symplectic, rng, target_at};
use sympsteer::control::*;
use sympsteer::geodesic::{build_system, CurvatureProfile};
use sympsteer::steering::*;
use sympsteer::symplectic::{random_hamiltonian, hamiltonian_exp, SymplecticMatrix, SymplecticTangent, TangentFrame};
use sympsteer::Error;

fn problem(r: &CurvatureProfile, delta: f64, seed: u64) -> SteeringProblem {
    let sys = build_system(r).unwrap();
    let grid = TimeGrid::with_default_steps(1.0).unwrap();
    let x0 = SymplecticMatrix::identity(r.m());
    let xbar = end_point(&sys, &ControlSignal::zero(sys.k()), &x0, &grid).unwrap();
    SteeringProblem::new(sys, x0, target_at(&xbar, delta, seed), grid).unwrap()
}

#[test]
fn reaches_random_target_on_flat_system() {
    let p = problem(&CurvatureProfile::flat(2), 1e-3, 0);
    assert!((p.distance().unwrap() - 1e-3).abs() < 1e-8);
    let sol = steer(&p).unwrap();
    assert!(sol.residual <= 1e-6);
    assert_eq!(sol.corank, 1);
    // Independent re-propagation of the returned control.
    let fine = TimeGrid::new(1.0, 4 * p.grid.n_steps()).unwrap();
    let again = end_point(&p.sys, &sol.u, &p.x0, &fine).unwrap();
    assert!(again.distance(p.target.mat()) <= 1e-6);
}

fn sweep(r: &CurvatureProfile, seed: u64) -> (Vec<f64>, Vec<SteeringSolution>) {
    let deltas = vec![1e-4, 1e-3, 1e-2, 1e-1];
    let sols = deltas.iter().map(|&d| steer(&problem(r, d, seed)).unwrap()).collect();
    (deltas, sols)
}

#[test]
fn square_root_law_on_corank_deficient_instances() {
    for r in [CurvatureProfile::flat(2), CurvatureProfile::constant(2, 1.0)] {
        let (deltas, sols) = sweep(&r, 3);
        assert!(sols.iter().all(|s| s.corank > 0 && s.residual <= 1e-6));
        let c2: Vec<f64> = sols.iter().map(|s| s.norms.c2).collect();
        let slope = loglog_slope(&deltas, &c2);
        assert!((0.4..=0.6).contains(&slope), "{:?}: slope {slope}", r.form());
        // |w₂| / |w₁|² stays bounded along the sweep.
        let ratios: Vec<f64> = sols.iter().map(|s| s.w2.l2_norm(1.0) / s.w1.l2_norm(1.0).powi(2)).collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(*r), b.max(*r)));
        assert!(hi.is_finite() && hi <= 100.0 * lo.max(1e-3), "{ratios:?}");
        assert!(sols.iter().all(|s| s.kernel_residual <= 1e-10));
    }
}

#[test]
fn linear_law_on_submersion_instances() {
    let (deltas, sols) = sweep(&CurvatureProfile::oscillatory(2, 1.0, 3.0), 5);
    assert!(sols.iter().all(|s| s.corank == 0 && s.residual <= 1e-6));
    let c2: Vec<f64> = sols.iter().map(|s| s.norms.c2).collect();
    let slope = loglog_slope(&deltas, &c2);
    assert!((0.85..=1.15).contains(&slope), "slope {slope}");
}

#[test]
fn trust_radius_and_trivial_targets() {
    let far = problem(&CurvatureProfile::flat(2), 0.5, 1);
    assert!(matches!(steer(&far), Err(Error::TrustRadius { .. })));
    let sys = build_system(&CurvatureProfile::flat(1)).unwrap();
    let grid = TimeGrid::with_default_steps(1.0).unwrap();
    let x0 = SymplecticMatrix::identity(1);
    let xbar = end_point(&sys, &ControlSignal::zero(1), &x0, &grid).unwrap();
    let sol = steer(&SteeringProblem::new(sys, x0, xbar.into_mat(), grid).unwrap()).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!(sol.residual <= 1e-12);
}

#[test]
fn corrector_moves_along_annihilator() {
    let p = problem(&CurvatureProfile::flat(2), 1e-3, 9);
    let xbar = p.reference().unwrap();
    let basis = std::sync::Arc::new(ControlBasis::windowed_legendre(1.0, p.sys.k()).unwrap());
    let ann = annihilator_basis(&p.sys, &p.grid, &ProbeSpace::Basis(basis)).unwrap();
    assert_eq!(ann.corank, 1);
    for sign in [1.0, -1.0] {
        let z = SymplecticTangent { base: &ann.vectors[0].base * (1e-3 * sign), anchor: xbar.clone() };
        let target = LocalChart::new(&xbar, 0.3).inverse(&z).unwrap();
        let q = SteeringProblem::new(p.sys.clone(), p.x0.clone(), target.into_mat(), p.grid.clone()).unwrap();
        let (w1, w2) = second_order_corrector(&q, &ControlSignal::zero(q.sys.k()), &z).unwrap();
        assert!(w1.l2_norm(1.0) > 0.0);
        // After w₁ + w₂ the annihilator component of the miss is second order small.
        let u = w1.combine(1.0, &w2, 1.0).unwrap();
        let reached = end_point(&q.sys, &u, &q.x0, &q.grid).unwrap();
        let frame = TangentFrame::new(&xbar);
        let miss = frame.coords(&(reached.mat() - q.target.mat())).norm();
        assert!(miss <= 1e-4, "{miss:e}");
        let sol = steer(&q).unwrap();
        assert!(sol.residual <= 1e-6);
    }
}

#[test]
fn local_chart_round_trip() {
    let mut r = rng(21);
    for m in 1..=3 {
        let anchor = random_symplectic(m, 0.6, &mut r);
        let h = random_hamiltonian(m, &mut r);
        let x = anchor.mul(&hamiltonian_exp(&h, 1e-2, 1e-10).unwrap()).unwrap();
        let (_, back) = local_inverse_projection(&x, &anchor, 0.3).unwrap();
        assert!((back.mat() - x.mat()).norm() <= 1e-9);
    }
    let anchor = SymplecticMatrix::identity(1);
    let far = hamiltonian_exp(&random_hamiltonian(1, &mut r), 2.0, 1e-8).unwrap();
    assert!(matches!(local_inverse_projection(&far, &anchor, 0.1), Err(Error::NoLocalInverse(_))));
}

#[test]
fn negative_probe_on_corank_one_systems() {
    for r in [CurvatureProfile::flat(2), CurvatureProfile::constant(2, 1.0)] {
        let sys = build_system(&r).unwrap();
        let grid = TimeGrid::with_default_steps(1.0).unwrap();
        let basis = std::sync::Arc::new(ControlBasis::windowed_legendre(1.0, sys.k()).unwrap());
        let ann = annihilator_basis(&sys, &grid, &ProbeSpace::Basis(basis)).unwrap();
        let probe = negative_subspace_probe(&sys, &grid, &ann.vectors[0], 1).unwrap();
        assert!(probe.trace < 0.0);
        assert!(probe.max_rayleigh < 0.0);
        // One-member families sit on the equality case of the bound.
        assert!(probe.max_rayleigh <= probe.bound + 1e-6 * probe.bound.abs());
        assert!(probe.bound < 0.0);
        assert!(probe.pairings.iter().all(|v| *v < 0.0));
    }
}

#[test]
fn probe_rejects_pairs_outside_l() {
    let bad = sympsteer::appendix::PolyPair {
        f: sympsteer::appendix::RationalPolynomial::from_ints(&[1]),
        g: sympsteer::appendix::RationalPolynomial::from_ints(&[1]),
    };
    assert!(matches!(check_probe_family(&[bad]), Err(Error::InvalidInput(_))));
}
