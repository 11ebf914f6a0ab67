mod common;

use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;
use rand::Rng;
use sympsteer::control::*;
use sympsteer::geodesic::*;
use sympsteer::symplectic::{Mat, SymplecticMatrix};

/// `[[c·I, s·I], [−ω s·I, c·I]]`-type closed form of `J̈ + κJ = 0`.
fn closed_form(m: usize, kappa: f64, t: f64) -> Mat {
    let (a, b, c) = if kappa > 0.0 {
        let w = kappa.sqrt();
        ((w * t).cos(), (w * t).sin() / w, -w * (w * t).sin())
    } else if kappa < 0.0 {
        let w = (-kappa).sqrt();
        ((w * t).cosh(), (w * t).sinh() / w, w * (w * t).sinh())
    } else {
        (1.0, t, 0.0)
    };
    let mut x = Mat::zeros(2 * m, 2 * m);
    for i in 0..m {
        x[(i, i)] = a;
        x[(i, i + m)] = b;
        x[(i + m, i)] = c;
        x[(i + m, i + m)] = a;
    }
    x
}

#[test]
fn poincare_maps_match_closed_forms() {
    let cases = [
        (CurvatureProfile::constant(2, 1.0), 1.0, FRAC_PI_2),
        (CurvatureProfile::constant(3, 1.0), 1.0, 2.0),
        (CurvatureProfile::constant(2, -1.0), -1.0, 1.0),
        (CurvatureProfile::flat(3), 0.0, 2.5),
        (CurvatureProfile::constant(1, 4.0), 4.0, 1.3),
    ];
    for (r, kappa, t) in cases {
        let p = jacobi_propagate(&r, t).unwrap();
        let err = (p.matrix.mat() - closed_form(r.m(), kappa, t)).norm();
        assert!(err <= 1e-8, "κ = {kappa}, T = {t}: {err:e}");
        assert!(p.matrix.defect() <= 1e-8);
    }
    let quarter = jacobi_propagate(&CurvatureProfile::constant(2, 1.0), FRAC_PI_2).unwrap();
    assert!((quarter.matrix.mat() - SymplecticMatrix::j(2).mat()).norm() <= 1e-8);
}

#[test]
fn oscillatory_map_is_symplectic() {
    for m in 1..=3 {
        let p = jacobi_propagate(&CurvatureProfile::oscillatory(m, 1.0, 3.0), 3.0).unwrap();
        assert!(p.matrix.defect() <= 1e-8);
    }
}

#[test]
fn channel_counts() {
    assert_eq!(channel_count(3), 6);
    assert_eq!(channel_pairs(2), vec![(0, 0), (0, 1), (1, 1)]);
    let e = e_sym(3, 0, 1);
    assert_eq!((e[(0, 1)], e[(1, 0)], e[(0, 0)]), (1.0, 1.0, 0.0));
    assert_eq!(e_sym(3, 2, 2)[(2, 2)], 2.0);
    let f = f_skew(3, 0, 2);
    assert_eq!((f[(0, 2)], f[(2, 0)]), (1.0, -1.0));
}

#[test]
fn closed_form_brackets() {
    for r in [CurvatureProfile::flat(3), CurvatureProfile::constant(2, -0.7), CurvatureProfile::oscillatory(3, 1.0, 3.0)] {
        for t in [0.0, 0.4, 1.1] {
            let rep = bracket_identities(&r, t).unwrap();
            assert!(rep.max_deviation() <= 1e-9, "{:?} at {t}: {rep:?}", r.form());
        }
    }
    let b1 = closed_b1(2, 0, 1);
    let e = e_sym(2, 0, 1);
    assert_eq!(b1.view((0, 0), (2, 2)), -&e);
    assert_eq!(b1.view((2, 2), (2, 2)), e);
}

#[test]
fn span_dimensions() {
    let mut r = common::rng(4);
    for (m, expected) in [(1, 3), (2, 10), (3, 21), (4, 36)] {
        let zero = span_dimension(m, &Mat::zeros(m, m)).unwrap();
        assert_eq!((zero.rank, zero.expected), (expected, expected));
        let a = Mat::from_fn(m, m, |_, _| r.random_range(-1.0..1.0));
        let sym = &a + a.transpose();
        assert!(span_dimension(m, &sym).unwrap().satisfied);
    }
}

#[test]
fn certificates_on_geodesic_systems() {
    for m in 1..=3 {
        let sys = build_system(&CurvatureProfile::oscillatory(m, 1.0, 3.0)).unwrap();
        let grid = TimeGrid::with_default_steps(1.0).unwrap();
        let first = first_order_certificate(&sys, &grid, DEFAULT_J_MAX).unwrap();
        if m == 1 {
            assert!(first.satisfied && first.rank == 3);
        }
        let second = second_order_certificate(&sys, 0.0, DEFAULT_J_MAX).unwrap();
        assert!(second.products_zero);
        assert!(second.membership_residuals.iter().all(|r| *r <= 1e-9), "{second:?}");
        assert_eq!(second.span_rank, m * (2 * m + 1));
        assert!(second.satisfied);
    }
}

#[test]
fn restricted_probe_corank() {
    let sys = build_system(&CurvatureProfile::flat(2)).unwrap();
    let grid = TimeGrid::with_default_steps(1.0).unwrap();
    let ann = annihilator_basis(&sys, &grid, &ProbeSpace::Brackets { j_max: 1 }).unwrap();
    // Oracle: SVD rank of S(T)·{B⁰, B¹}.
    let st = propagate_fundamental(&sys, &grid).unwrap().final_state().clone();
    let mats: Vec<Mat> = channel_pairs(2)
        .into_iter()
        .flat_map(|(i, j)| [control_generator(2, i, j), closed_b1(2, i, j)])
        .map(|b| st.mat() * b)
        .collect();
    let cols: Vec<DVector<f64>> = mats.iter().map(|m| DVector::from_iterator(16, m.transpose().iter().copied())).collect();
    let svd = nalgebra::DMatrix::from_columns(&cols).svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|s| **s > 1e-9 * smax).count();
    assert_eq!(ann.corank, 10 - rank);
    // The truncated probe misses directions of the full image.
    assert!(!ann.identities_hold);
    let basis = std::sync::Arc::new(ControlBasis::windowed_legendre(1.0, sys.k()).unwrap());
    let full = annihilator_basis(&sys, &grid, &ProbeSpace::Basis(basis)).unwrap();
    assert_eq!(full.corank, 1);
    assert!(full.identities_hold);
}

#[test]
fn curvature_update_matches_controlled_system() {
    let grid = TimeGrid::with_default_steps(1.2).unwrap();
    for r in [CurvatureProfile::constant(2, 0.5), CurvatureProfile::oscillatory(2, 1.0, 3.0)] {
        let sys = build_system(&r).unwrap();
        let u = ControlSignal::analytic(sys.k(), |t| DVector::from_vec(vec![0.3 * t.sin(), -0.2 + t * 0.1, 0.4 * (2.0 * t).cos()]));
        let steered = end_point(&sys, &u, &SymplecticMatrix::identity(2), &grid).unwrap();
        let updated = jacobi_propagate_on(&curvature_update(&r, &u).unwrap(), &grid).unwrap();
        assert!((steered.mat() - updated.matrix.mat()).norm() <= 1e-8);
    }
}

#[test]
fn constant_update_shifts_constant_curvature() {
    let (c, a, t) = (2.0, 0.25, 1.7);
    let r = CurvatureProfile::constant(2, c);
    // u_ii = a on the diagonal channels gives U = 2a·I.
    let u = ControlSignal::analytic(3, move |_| DVector::from_vec(vec![a, 0.0, a]));
    let p = jacobi_propagate(&curvature_update(&r, &u).unwrap(), t).unwrap();
    assert!((p.matrix.mat() - closed_form(2, c - 2.0 * a, t)).norm() <= 1e-8);
    assert!(curvature_update(&r, &ControlSignal::zero(2)).is_err());
}

#[test]
fn sampled_curvature_interpolates() {
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
    let exact = CurvatureProfile::oscillatory(2, 1.0, 1.0);
    let samples: Vec<Mat> = times.iter().map(|t| exact.at(*t)).collect();
    let r = CurvatureProfile::sampled(&times, &samples).unwrap();
    assert!((r.at(0.555) - exact.at(0.555)).norm() <= 1e-7);
    let a = jacobi_propagate(&r, 2.0).unwrap();
    let b = jacobi_propagate(&exact, 2.0).unwrap();
    assert!((a.matrix.mat() - b.matrix.mat()).norm() <= 1e-6);
}
