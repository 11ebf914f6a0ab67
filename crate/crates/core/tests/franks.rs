mod common;

use common::target_at;
use nalgebra::DVector;
use proptest::prelude::*;
use sympsteer::control::ControlSignal;
use sympsteer::franks::*;
use sympsteer::geodesic::{channel_count, jacobi_propagate, CurvatureProfile};
use sympsteer::Error;

#[test]
fn window_counts_and_tie_break() {
    assert_eq!(pigeonhole_count(3), 3);
    assert_eq!(pigeonhole_count(2), 1);
    let w = select_window(3.0, 1.0, &[]).unwrap();
    assert_eq!((w.k, w.n_intervals, w.index), (3, 3, 0));
    assert_eq!(w.t_bar, 0.0);
    assert!((w.tau - 1.0).abs() < 1e-15);
    assert_eq!(w.rho_bar, 0.5);
}

#[test]
fn blocked_intervals_are_skipped() {
    // T = 5, r_g = 1: k = 5, N = 10, τ = 0.5, all ten intervals fit in [0, 5].
    let w = select_window(5.0, 1.0, &[(0.2, 1.3), (1.7, 2.2), (2.7, 3.3), (3.7, 4.2), (4.7, 0.1)]).unwrap();
    assert_eq!(w.index, 1);
    assert!((w.t_bar - 0.5).abs() < 1e-15);
    assert!((w.rho_bar - 0.15).abs() < 1e-12);
    let all: Vec<(f64, f64)> = (0..10).map(|i| (0.25 + 0.5 * i as f64, 0.25 + 0.5 * i as f64)).collect();
    assert!(matches!(select_window(5.0, 1.0, &all), Err(Error::Inconsistent(_))));
    assert!(select_window(0.0, 1.0, &[]).is_err());
}

proptest! {
    #[test]
    fn window_avoids_intersections(t_final in 0.5f64..8.0, r_g in 0.2f64..2.0, raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 0..6)) {
        let pts: Vec<(f64, f64)> = raw.iter().map(|(a, b)| (a * t_final, b * t_final)).collect();
        if let Ok(w) = select_window(t_final, r_g, &pts) {
            prop_assert!(w.t_bar >= 0.0 && w.t_bar + w.tau <= t_final * (1.0 + 1e-12));
            for &(a, b) in &pts {
                for s in [a, b] {
                    prop_assert!(s < w.t_bar || s > w.t_bar + w.tau);
                }
            }
            prop_assert!(w.rho_bar > 0.0 && w.rho_bar <= 0.5 * r_g);
        }
    }

    #[test]
    fn cutoff_is_monotone_c2(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(cutoff_q(lo) >= cutoff_q(hi));
        prop_assert!((0.0..=1.0).contains(&cutoff_q(a)));
    }
}

#[test]
fn cutoff_examples() {
    assert_eq!(cutoff_q(0.2), 1.0);
    assert_eq!(cutoff_q(0.9), 0.0);
    assert!((cutoff_q(0.5) - 0.5).abs() < 1e-15);
    for knot in [1.0 / 3.0, 2.0 / 3.0] {
        for order in 0..=2 {
            let (l, r) = (cutoff_q_derivative(knot - 1e-9, order), cutoff_q_derivative(knot + 1e-9, order));
            assert!((l - r).abs() < 1e-5, "order {order} at {knot}");
        }
    }
    let h = 1e-5;
    for x in [0.4, 0.5, 0.6] {
        let fd1 = (cutoff_q(x + h) - cutoff_q(x - h)) / (2.0 * h);
        assert!((fd1 - cutoff_q_derivative(x, 1)).abs() < 1e-6);
        let fd2 = (cutoff_q_derivative(x + h, 1) - cutoff_q_derivative(x - h, 1)) / (2.0 * h);
        assert!((fd2 - cutoff_q_derivative(x, 2)).abs() < 1e-4);
    }
}

#[test]
fn bump_examples() {
    assert_eq!(bump_p(0, 1, &[0.0, 0.0, 0.0]).unwrap(), 0.0);
    assert!((bump_p(0, 1, &[0.1, 0.1, 0.0]).unwrap() - 0.01).abs() < 1e-15);
    assert!((bump_p(0, 0, &[0.2, 0.0]).unwrap() - 0.02).abs() < 1e-15);
    assert_eq!(bump_p(0, 1, &[0.5, 0.5]).unwrap(), 0.0);
    assert!(bump_p(1, 0, &[0.1, 0.1]).is_err());
    assert!(bump_p(0, 2, &[0.1, 0.1]).is_err());
}

fn single_channel(m: usize, channel: usize, tau: f64) -> ControlSignal {
    let k = channel_count(m);
    ControlSignal::analytic(k, move |t| {
        let mut v = DVector::zeros(k);
        let s = t / tau;
        if (0.0..=1.0).contains(&s) {
            v[channel] = 0.3 * (s * (1.0 - s)).powi(3) * 64.0;
        }
        v
    })
}

#[test]
fn local_properties_single_channel() {
    // Channel ordering for m = 2: (0,0), (0,1), (1,1).
    let spec = FermiBumpSpec::new(2, 0.1, 1.0, single_channel(2, 1, 1.0)).unwrap();
    let field = sigma_field(&spec, FieldResolution::default_for(0.1)).unwrap();
    let report = verify_local_properties(&field, &spec);
    assert!(report.pass, "{:?}", report.checks);
    assert_eq!(report.checks.len(), 6);
    for t in [0.25, 0.5, 0.75] {
        let h = spec.axis_hessian(t, 0.1 / 64.0);
        assert!((h[(0, 1)] - spec.u.value(t)[1]).abs() <= 1e-4);
        assert!(h[(0, 0)].abs() <= 1e-10 && h[(1, 1)].abs() <= 1e-10);
    }
    let center = field.center();
    for a in 0..field.axis.len() {
        assert_eq!(field.value(a, center), 0.0);
    }
    for (p, v) in field.values.iter().enumerate() {
        if *v != 0.0 {
            let r: f64 = field.x_of(p % field.slice_len()).iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(r < field.rho);
        }
    }
}

#[test]
fn zero_control_gives_zero_field() {
    let spec = FermiBumpSpec::new(2, 0.1, 1.0, ControlSignal::zero(3)).unwrap();
    let field = sigma_field(&spec, FieldResolution::default_for(0.1)).unwrap();
    assert!(field.values.iter().all(|v| *v == 0.0));
    assert!(sigma_field(&spec, FieldResolution { axis_nodes: 17, h_x: 0.1 / 4.0 }).is_err());
}

#[test]
fn c2_constant_is_stable_across_radii() {
    let mut ratios = Vec::new();
    for rho in [0.05, 0.1, 0.2] {
        for channel in 0..3 {
            let spec = FermiBumpSpec::new(2, rho, 1.0, single_channel(2, channel, 1.0)).unwrap();
            let field = sigma_field(&spec, FieldResolution::default_for(rho)).unwrap();
            let report = verify_local_properties(&field, &spec);
            assert!(report.pass, "ρ = {rho}, channel {channel}: {:?}", report.checks);
            ratios.push(report.c2_ratio);
        }
    }
    let c = bump_c2_constant(2);
    assert!(ratios.iter().all(|r| *r > 0.0 && *r <= c), "{ratios:?} vs {c}");
}

#[test]
fn franks_end_to_end_on_flat_window() {
    let r = CurvatureProfile::flat(2);
    let window = select_window(1.0, 0.5, &[]).unwrap();
    let base = jacobi_propagate(&r, 1.0).unwrap().matrix;
    let target = sympsteer::symplectic::SymplecticMatrix::new(target_at(&base, 1e-3, 4), 1e-9).unwrap();
    let out = synthesize_franks(&r, &window, &target, 0.1, &FranksOptions::default()).unwrap();
    assert!(out.residual <= 1e-6, "{}", out.residual);
    assert!(out.route_gap <= 1e-7);
    assert!(out.report.pass, "{:?}", out.report.checks);
    assert!((out.delta - 1e-3).abs() < 1e-8);
}

#[test]
fn franks_with_interior_window() {
    let r = CurvatureProfile::constant(2, 0.5);
    let window = select_window(3.0, 1.0, &[(0.5, 0.5)]).unwrap();
    assert_eq!(window.index, 1);
    let base = jacobi_propagate(&r, 3.0).unwrap().matrix;
    let target = sympsteer::symplectic::SymplecticMatrix::new(target_at(&base, 1e-3, 8), 1e-9).unwrap();
    let rho = window.rho_bar.min(0.1);
    let out = synthesize_franks(&r, &window, &target, rho, &FranksOptions::default()).unwrap();
    assert!(out.residual <= 1e-6, "{}", out.residual);
    assert!(out.route_gap <= 1e-7);
    assert!(out.report.pass);
    assert!(synthesize_franks(&r, &window, &target, 2.0 * window.rho_bar, &FranksOptions::default()).is_err());
}

#[test]
fn identity_target_needs_no_bump() {
    let r = CurvatureProfile::flat(2);
    let window = select_window(1.0, 0.5, &[]).unwrap();
    let base = jacobi_propagate(&r, 1.0).unwrap().matrix;
    let out = synthesize_franks(&r, &window, &base, 0.1, &FranksOptions::default()).unwrap();
    assert!(out.field.values.iter().all(|v| *v == 0.0));
    assert_eq!(out.delta, 0.0);
}

#[test]
fn sigma_ratio_is_stable_across_the_sweep() {
    let r = CurvatureProfile::flat(2);
    let window = select_window(1.0, 0.5, &[]).unwrap();
    let base = jacobi_propagate(&r, 1.0).unwrap().matrix;
    let ratios: Vec<f64> = [1e-4, 1e-3, 1e-2, 1e-1]
        .iter()
        .map(|&d| {
            let target = sympsteer::symplectic::SymplecticMatrix::new(target_at(&base, d, 12), 1e-9).unwrap();
            let out = synthesize_franks(&r, &window, &target, 0.1, &FranksOptions::default()).unwrap();
            assert!(out.residual <= 1e-6);
            out.sigma_ratio
        })
        .collect();
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(hi / lo <= 2.0, "{ratios:?}");
}
