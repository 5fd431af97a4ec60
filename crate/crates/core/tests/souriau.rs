mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use maslov::linalg::{self, CMat, RMat};
use maslov::random;
use maslov::souriau::{kernel_dim_minus_one, lagrangian_from_souriau, souriau, souriau_real};
use maslov::space::intersection_dim;
use maslov::{ErrorKind, LagrangianFrame, SymplecticSpace, UnitaryMatrix};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn line(sp: &Arc<SymplecticSpace>, t: f64) -> LagrangianFrame {
    LagrangianFrame::new(sp, RMat::from_row_slice(2, 1, &[t.cos(), t.sin()])).unwrap()
}

/// Random pair of Lagrangians sharing exactly `k` directions.
fn pair_with_intersection(
    sp: &Arc<SymplecticSpace>,
    k: usize,
    rng: &mut random::SeededRng,
) -> (LagrangianFrame, LagrangianFrame) {
    let n = sp.n();
    let z = random::unitary(n, rng);
    let mut d = CMat::identity(n, n);
    for j in k..n {
        d[(j, j)] = Complex64::from_polar(1.0, 0.2 + 2.7 * rng.random::<f64>());
    }
    (common::frame_of(sp, &z), common::frame_of(sp, &(&z * d)))
}

#[test]
fn perp_maps_to_identity() {
    let mut rng = random::rng(1);
    let sp = common::space(3);
    let l = random::lagrangian(&sp, &mut rng);
    let s = souriau(&l, &l.perp()).unwrap();
    assert!(s.distance(&UnitaryMatrix::identity(3)) < 1e-12);
}

#[test]
fn self_maps_to_minus_identity() {
    let mut rng = random::rng(2);
    let sp = common::space(3);
    let l = random::lagrangian(&sp, &mut rng);
    let s = souriau(&l, &l).unwrap();
    let minus = UnitaryMatrix::diagonal(&[PI, PI, PI]);
    assert!(s.distance(&minus) < 1e-12);
    assert_eq!(kernel_dim_minus_one(&s, 1e-7).unwrap(), 3);
}

#[test]
fn rotating_line_fixture() {
    let sp = common::space(1);
    let lambda = sp.horizontal();
    for k in 0..24 {
        let t = k as f64 * PI / 12.0 + 0.01;
        let s = souriau(&lambda, &line(&sp, t)).unwrap();
        let expected = Complex64::from_polar(1.0, 2.0 * t - PI);
        assert!((s.matrix()[(0, 0)] - expected).norm() < 1e-12, "t = {t}");
    }
    let s = souriau(&lambda, &line(&sp, PI)).unwrap();
    assert!((s.matrix()[(0, 0)] + Complex64::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn souriau_is_unitary_and_complex_linear() {
    let mut rng = random::rng(3);
    for n in 1..6 {
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let m = random::lagrangian(&sp, &mut rng);
        let s = souriau_real(&l, &m).unwrap();
        assert!(linalg::max_abs(&(&s * sp.j() - sp.j() * &s)) < 1e-9);
        let u = souriau(&l, &m).unwrap();
        assert!(linalg::unitarity_residual(u.matrix()) < 1e-9);
        assert!(linalg::max_abs(&(linalg::realify(u.matrix()) - s)) < 1e-12);
    }
}

#[test]
fn souriau_relative_to_horizontal_is_complex_symmetric() {
    let mut rng = random::rng(4);
    let sp = common::space(4);
    let m = random::lagrangian(&sp, &mut rng);
    let u = souriau(&sp.horizontal(), &m).unwrap();
    assert!(linalg::norm2_c(&(u.matrix() - u.matrix().transpose())) < 1e-10);
}

#[test]
fn symmetry_identity() {
    let mut rng = random::rng(5);
    for n in 1..6 {
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let m = random::lagrangian(&sp, &mut rng);
        let a = souriau_real(&l, &m).unwrap();
        let b = souriau_real(&m, &l).unwrap();
        assert!(linalg::max_abs(&(a.transpose() - b)) < 1e-10);
        // the same statement for the unitaries
        let ua = souriau(&l, &m).unwrap();
        let ub = souriau(&m, &l).unwrap();
        assert!(ua.adjoint().distance(&ub) < 1e-10);
    }
}

#[test]
fn triple_relation() {
    let mut rng = random::rng(6);
    for n in 1..6 {
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let m = random::lagrangian(&sp, &mut rng);
        let v = random::lagrangian(&sp, &mut rng);
        let lhs = souriau_real(&m, &v).unwrap() * souriau_real(&l, &m).unwrap();
        let rhs = -souriau_real(&l, &v).unwrap();
        assert!(linalg::max_abs(&(lhs - rhs)) < 1e-10);
    }
}

#[test]
fn equivariance_under_unitary_maps() {
    let mut rng = random::rng(7);
    for n in 1..6 {
        let sp = common::space(n);
        let u = linalg::realify(&random::unitary(n, &mut rng));
        let l = random::lagrangian(&sp, &mut rng);
        let m = random::lagrangian(&sp, &mut rng);
        let ul = LagrangianFrame::new(&sp, &u * l.matrix()).unwrap();
        let um = LagrangianFrame::new(&sp, &u * m.matrix()).unwrap();
        let lhs = &u * souriau_real(&l, &m).unwrap() * u.transpose();
        let rhs = souriau_real(&ul, &um).unwrap();
        assert!(linalg::max_abs(&(lhs - rhs)) < 1e-10);
    }
}

#[test]
fn kernel_dimension_examples() {
    assert_eq!(kernel_dim_minus_one(&UnitaryMatrix::diagonal(&[PI; 3]), 1e-7).unwrap(), 3);
    assert_eq!(kernel_dim_minus_one(&UnitaryMatrix::identity(3), 1e-7).unwrap(), 0);
    let mut rng = random::rng(8);
    let sp = common::space(4);
    let (l, m) = pair_with_intersection(&sp, 1, &mut rng);
    assert_eq!(intersection_dim(&l, &m, 1e-8).unwrap(), 1);
    assert_eq!(kernel_dim_minus_one(&souriau(&l, &m).unwrap(), 1e-7).unwrap(), 1);
}

#[test]
fn kernel_dimension_rejects_bad_tolerance() {
    let u = UnitaryMatrix::identity(2);
    assert_eq!(kernel_dim_minus_one(&u, 0.0).unwrap_err().kind(), ErrorKind::Validation);
    assert_eq!(kernel_dim_minus_one(&u, 0.5).unwrap_err().kind(), ErrorKind::Validation);
}

#[test]
fn kernel_dimension_matches_intersection_on_random_pairs() {
    let mut rng = random::rng(9);
    for trial in 0..500 {
        let n = 1 + trial % 6;
        let k = rng.random_range(0..=n);
        let sp = common::space(n);
        let (l, m) = pair_with_intersection(&sp, k, &mut rng);
        let w = souriau(&l, &m).unwrap();
        assert_eq!(kernel_dim_minus_one(&w, 1e-7).unwrap(), intersection_dim(&l, &m, 1e-8).unwrap());
        assert_eq!(kernel_dim_minus_one(&w, 1e-7).unwrap(), k);
    }
}

#[test]
fn inverse_of_identity_and_minus_identity() {
    let mut rng = random::rng(10);
    let sp = common::space(3);
    let l = random::lagrangian(&sp, &mut rng);
    let perp = lagrangian_from_souriau(&l, &UnitaryMatrix::identity(3)).unwrap();
    assert!(perp.distance(&l.perp()) < 1e-10);
    let same = lagrangian_from_souriau(&l, &UnitaryMatrix::diagonal(&[PI; 3])).unwrap();
    assert!(same.distance(&l) < 1e-10);
}

#[test]
fn inverse_rejects_non_souriau_unitaries() {
    let sp = common::space(2);
    let u = UnitaryMatrix::diagonal(&[0.3, 1.1]);
    let w = UnitaryMatrix::new(
        CMat::from_row_slice(2, 2, &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, 0.0)]),
    )
    .unwrap();
    // a diagonal unitary is symmetric and lies in the image; an antisymmetric one does not
    assert!(lagrangian_from_souriau(&sp.horizontal(), &u).is_ok());
    assert_eq!(lagrangian_from_souriau(&sp.horizontal(), &w).unwrap_err().kind(), ErrorKind::Validation);
}

#[test]
fn souriau_on_general_metric() {
    let mut rng = random::rng(11);
    let omega = random::skew_invertible(2, &mut rng);
    let sp = Arc::new(SymplecticSpace::compatible(&omega).unwrap());
    let (l, m) = pair_with_intersection_general(&sp, &mut rng);
    let w = souriau(&l, &m).unwrap();
    assert!(linalg::unitarity_residual(w.matrix()) < 1e-9);
    assert_eq!(kernel_dim_minus_one(&w, 1e-7).unwrap(), intersection_dim(&l, &m, 1e-8).unwrap());
    let back = lagrangian_from_souriau(&l, &w).unwrap();
    assert!(back.distance(&m) < 1e-8);
}

fn pair_with_intersection_general(
    sp: &Arc<SymplecticSpace>,
    rng: &mut random::SeededRng,
) -> (LagrangianFrame, LagrangianFrame) {
    let l = random::lagrangian(sp, rng);
    // rotate one direction of l inside l ⊕ Jl, keep the other
    let f = l.matrix();
    let jf = sp.j() * f;
    let mut g = f.clone();
    g.set_column(1, &(f.column(1) * 0.6 + jf.column(1) * 0.8));
    (l, LagrangianFrame::new(sp, g).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_through_inverse(seed in any::<u64>(), n in 1usize..7) {
        let mut rng = random::rng(seed);
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let m = random::lagrangian(&sp, &mut rng);
        let w = souriau(&l, &m).unwrap();
        let back = lagrangian_from_souriau(&l, &w).unwrap();
        prop_assert!(back.distance(&m) < 1e-8);
    }

    #[test]
    fn triple_relation_for_unitaries(seed in any::<u64>(), n in 1usize..5) {
        let mut rng = random::rng(seed);
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let m = random::lagrangian(&sp, &mut rng);
        let v = random::lagrangian(&sp, &mut rng);
        let lhs = souriau(&m, &v).unwrap().mul(&souriau(&l, &m).unwrap());
        let rhs = souriau(&l, &v).unwrap();
        prop_assert!(linalg::norm2_c(&(lhs.matrix() + rhs.matrix())) < 1e-9);
    }
}
