mod common;

use approx::assert_abs_diff_eq;
use common::{mat, random_symplectic, rng};
use proptest::prelude::*;
use sympsteer::symplectic::*;

#[test]
fn defect_of_diag_two() {
    let x = mat(2, &[2.0, 0.0, 0.0, 2.0]);
    assert_abs_diff_eq!(symplectic_defect(&x).unwrap(), 3.0 * 2f64.sqrt(), epsilon = 1e-14);
}

#[test]
fn e12_e13_bracket() {
    use sympsteer::geodesic::{e_sym, f_skew};
    let b = lie_bracket(&e_sym(3, 0, 1), &e_sym(3, 0, 2)).unwrap();
    assert_eq!(b, f_skew(3, 1, 2));
}

#[test]
fn odd_dimension_rejected() {
    assert!(symplectic_defect(&Mat::identity(3, 3)).is_err());
    assert!(lie_bracket(&Mat::identity(2, 2), &Mat::identity(4, 4)).is_err());
}

#[test]
fn projection_at_identity() {
    let m = Mat::from_fn(4, 4, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
    let j = j_matrix(2);
    let jm = &j * &m;
    let expected = -(&j * (&jm + jm.transpose()) * 0.5);
    let p = tangent_projection(&m, &SymplecticMatrix::identity(2)).unwrap();
    assert!((p.base - expected).norm() < 1e-13);
}

#[test]
fn hamiltonian_exp_defect() {
    let mut r = rng(5);
    for m in 1..=3 {
        let h = random_hamiltonian(m, &mut r);
        let x = hamiltonian_exp(&h, 1.0, 1e-8).unwrap();
        assert!(x.defect() <= 1e-10);
    }
    assert!(hamiltonian_exp(&Mat::identity(2, 2), 1.0, 1e-8).is_err());
}

fn seeded(m: usize, seed: u64, scale: f64) -> Mat {
    random_symplectic(m, scale, &mut rng(seed)).into_mat()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn products_stay_symplectic(m in 1usize..=4, s1 in any::<u64>(), s2 in any::<u64>()) {
        let x = seeded(m, s1, 1.0);
        let y = seeded(m, s2, 1.0);
        prop_assert!(symplectic_defect(&(&x * &y)).unwrap() <= 1e-12 * (1.0 + x.norm() * y.norm()).powi(2));
    }

    #[test]
    fn bracket_is_antisymmetric(m in 1usize..=3, s1 in any::<u64>(), s2 in any::<u64>()) {
        let mut r = rng(s1 ^ s2.rotate_left(7));
        let a = random_hamiltonian(m, &mut r);
        let b = random_hamiltonian(m, &mut r);
        prop_assert_eq!(lie_bracket(&a, &b).unwrap(), -lie_bracket(&b, &a).unwrap());
    }

    #[test]
    fn jacobi_identity(m in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b, c) = (random_hamiltonian(m, &mut r), random_hamiltonian(m, &mut r), random_hamiltonian(m, &mut r));
        let br = |x: &Mat, y: &Mat| lie_bracket(x, y).unwrap();
        let total = br(&a, &br(&b, &c)) + br(&b, &br(&c, &a)) + br(&c, &br(&a, &b));
        prop_assert!(total.norm() <= 1e-10);
    }

    #[test]
    fn projection_idempotent_and_self_adjoint(m in 1usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let anchor = random_symplectic(m, 0.7, &mut r);
        let n = 2 * m;
        let a = Mat::from_fn(n, n, |i, j| ((seed >> ((i * n + j) % 60)) & 7) as f64 - 3.5);
        let b = Mat::from_fn(n, n, |i, j| ((seed.rotate_left(17) >> ((i + j * n) % 60)) & 7) as f64 - 3.5);
        let pa = tangent_projection(&a, &anchor).unwrap();
        let pb = tangent_projection(&b, &anchor).unwrap();
        let ppa = tangent_projection(&pa.base, &anchor).unwrap();
        prop_assert!((&ppa.base - &pa.base).norm() <= 1e-10 * (1.0 + a.norm()));
        let lhs = frobenius_inner(&pa.base, &b).unwrap();
        let rhs = frobenius_inner(&a, &pb.base).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + a.norm() * b.norm()));
        prop_assert!(pa.tangency_defect() <= 1e-9 * (1.0 + a.norm()));
    }
}
