use num_bigint::BigInt;
use num_traits::{One, Zero};
use proptest::prelude::*;
use sympsteer::appendix::*;
use sympsteer::Error;

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// `f ⊙ g = ∫₀¹∫₀ᵗ f(t) g(s) ds dt`, by exact antiderivatives.
fn odot_oracle(f: &RationalPolynomial, g: &RationalPolynomial) -> Rational {
    let mut total = Rational::zero();
    for (p, a) in f.coeffs().iter().enumerate() {
        for (k, b) in g.coeffs().iter().enumerate() {
            // ∫₀ᵗ s^k ds = t^{k+1}/(k+1); ∫₀¹ t^p · t^{k+1} dt = 1/(p+k+2)
            total += a * b * q(1, ((k + 1) * (p + k + 2)) as i64);
        }
    }
    total
}

#[test]
fn odot_shift_example() {
    let f = base_f();
    let sg = RationalPolynomial::one().times_t(1);
    assert_eq!(odot(&f, &sg), q(1, 60));
    assert_eq!(odot(&f, &sg), alpha(0, 1) - alpha(1, 1) * q(6, 1) + alpha(2, 1) * q(6, 1));
}

#[test]
fn vanishing_moments_cancel() {
    let f = base_f();
    let lhs = odot(&f, &f.times_t(1)) + odot(&f.times_t(1), &f);
    assert!(lhs.is_zero());
}

#[test]
fn printed_corner_entries() {
    let a = build_matrix_a(50).unwrap();
    let col0: Vec<Rational> = a.iter().map(|r| r[0].clone()).collect();
    assert_eq!(col0, vec![q(1, 1), q(1, 2), q(1, 60), q(1, 60), q(1, 30), q(-1, 2), q(1, 40)]);
    assert_eq!(a[5][1], q(-5, 14));
    assert_eq!(a[6][1], q(2, 105));
    assert!(build_matrix_a(5).is_err());
}

#[test]
fn printed_rows_are_rescaled_constraint_forms() {
    let d = 12;
    let printed = build_matrix_a(d).unwrap();
    let closed = closed_form_rows(d);
    let (sys, target) = base_case_system(&base_f(), d);
    let mut direct = sys.rows.clone();
    direct.push(target);
    assert_eq!(closed, direct);
    for (p, c) in printed.iter().zip(&closed) {
        let ratio = &c[0] / &p[0];
        assert!(p.iter().zip(c).all(|(x, y)| x * &ratio == *y));
    }
}

#[test]
fn rank_of_a_is_six() {
    for d in [6, 10, 20, 50] {
        assert_eq!(rank_exact(&build_matrix_a(d).unwrap()), 6, "d = {d}");
    }
}

#[test]
fn paper_f_has_no_base_case() {
    assert!(matches!(solve_base_case(50), Err(Error::Infeasible(_))));
    assert_eq!(minimal_degree(&base_f(), 30), None);
}

#[test]
fn fallback_base_case() {
    let f = fallback_f();
    assert!(f.moment(0).is_zero() && f.moment(1).is_zero());
    assert_eq!(minimal_degree(&f, 30), Some(7));
    let pair = base_pair(12).unwrap();
    assert_eq!(pair.f, f);
    assert!(pair.g.degree().unwrap() <= 12);
    let report = verify_membership_l(&pair.f, &pair.g);
    assert!(report.member, "{report:?}");
    assert_eq!(odot(&pair.f.times_t(1), &pair.g.times_t(1)), Rational::one());
    assert_eq!(odot_oracle(&pair.f.times_t(1), &pair.g.times_t(1)), Rational::one());
    for c in &report.equalities {
        assert!(c.ok);
    }
}

#[test]
fn two_pair_family_stays_in_l() {
    let first = extend_space(&[], 12).unwrap();
    let second = (8..=40).find_map(|d| extend_space(std::slice::from_ref(&first), d).ok()).unwrap();
    let pairs = [first, second];
    let probes = vec![vec![1, 0], vec![0, 1], vec![1, 1], vec![2, -3], vec![-5, 7]];
    for r in probe_span(&pairs, &probes) {
        assert!(r.member, "{r:?}");
    }
}

#[test]
fn polynomial_json_round_trip() {
    let g = base_pair(10).unwrap().g;
    let j = PolynomialJson::from(&g);
    let text = serde_json::to_string(&j).unwrap();
    let back: PolynomialJson = serde_json::from_str(&text).unwrap();
    assert_eq!(RationalPolynomial::try_from(&back).unwrap(), g);
    let bad: PolynomialJson = serde_json::from_str(r#"{"num":["1"],"den":["0"]}"#).unwrap();
    assert!(RationalPolynomial::try_from(&bad).is_err());
}

fn poly() -> impl Strategy<Value = RationalPolynomial> {
    prop::collection::vec((-20i64..=20, 1i64..=9), 1..=6)
        .prop_map(|c| RationalPolynomial::new(c.into_iter().map(|(n, d)| q(n, d)).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn odot_matches_double_integral(f in poly(), g in poly()) {
        prop_assert_eq!(odot(&f, &g), odot_oracle(&f, &g));
    }

    #[test]
    fn integration_by_parts(f in poly(), g in poly()) {
        for c in integration_by_parts_identities(&f, &g) {
            prop_assert!(c.holds, "{}: {} vs {}", c.name, c.lhs, c.rhs);
        }
    }

    #[test]
    fn odot_is_bilinear(f in poly(), g in poly(), h in poly(), a in -5i64..=5) {
        let a = q(a, 1);
        prop_assert_eq!(odot(&f.add(&h.scale(&a)), &g), odot(&f, &g) + &a * odot(&h, &g));
        prop_assert_eq!(odot(&f, &g.add(&h.scale(&a))), odot(&f, &g) + &a * odot(&f, &h));
    }
}
