mod common;

use std::sync::Arc;

use maslov::linalg::{self, RMat};
use maslov::random;
use maslov::space::{intersection_dim, kato_pair_transform, standard_j};
use maslov::{ErrorKind, LagrangianFrame, SymmetricGenerator, SymplecticSpace};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;

fn e(m: usize, i: usize) -> RMat {
    let mut v = RMat::zeros(m, 1);
    v[(i, 0)] = 1.0;
    v
}

#[test]
fn standard_space_n1() {
    let sp = SymplecticSpace::standard(1).unwrap();
    assert_eq!(sp.j(), &RMat::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    assert_eq!(sp.metric(), &RMat::identity(2, 2));
}

#[test]
fn standard_j_squares_to_minus_identity_exactly() {
    let j = standard_j(2);
    assert_eq!(&j * &j, -RMat::identity(4, 4));
}

#[test]
fn standard_form_values() {
    let sp = SymplecticSpace::standard(3).unwrap();
    assert_eq!(sp.omega(&e(6, 0), &e(6, 3))[(0, 0)], 1.0);
    assert_eq!(sp.omega(&e(6, 0), &e(6, 1))[(0, 0)], 0.0);
}

#[test]
fn zero_dimension_is_rejected() {
    let err = SymplecticSpace::standard(0).unwrap_err();
    assert_eq!(err.kind(), ErrorKind::Validation);
}

#[test]
fn compatible_structure_of_standard_form() {
    let sp = SymplecticSpace::compatible(&standard_j(2)).unwrap();
    assert!(linalg::max_abs(&(sp.j() - standard_j(2))) < 1e-12);
    assert!(linalg::max_abs(&(sp.metric() - RMat::identity(4, 4))) < 1e-12);
}

#[test]
fn compatible_structure_of_doubled_form() {
    let sp = SymplecticSpace::compatible(&(standard_j(2) * 2.0)).unwrap();
    assert!(linalg::max_abs(&(sp.j() - standard_j(2))) < 1e-12);
    assert!(linalg::max_abs(&(sp.metric() - RMat::identity(4, 4) * 2.0)) < 1e-12);
}

/// `omega(x, y) = (Omega x, y)`, so `omega(e_i, e_j) = Omega_ji`.
fn reproduction_error(sp: &SymplecticSpace, omega: &RMat) -> f64 {
    let m = omega.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            let v = sp.omega(&e(m, i), &e(m, j))[(0, 0)];
            worst = worst.max((v - omega[(j, i)]).abs());
        }
    }
    worst
}

#[test]
fn compatible_structure_reproduces_random_forms() {
    let mut rng = random::rng(11);
    for k in 0..50 {
        let n = 1 + k % 4;
        let omega = random::skew_invertible(n, &mut rng);
        let sp = SymplecticSpace::compatible(&omega).unwrap();
        assert!(sp.invariant_residuals().iter().all(|r| *r < 1e-9), "{:?}", sp.invariant_residuals());
        assert!(reproduction_error(&sp, &omega) < 1e-9);
    }
}

#[test]
fn compatible_structure_rejects_bad_input() {
    let sym = RMat::identity(4, 4);
    assert_eq!(SymplecticSpace::compatible(&sym).unwrap_err().kind(), ErrorKind::Validation);
    let singular = RMat::zeros(4, 4);
    assert_eq!(SymplecticSpace::compatible(&singular).unwrap_err().kind(), ErrorKind::Validation);
}

#[test]
fn compatible_with_base_reproduces_form() {
    let mut rng = random::rng(12);
    for _ in 0..10 {
        let omega = random::skew_invertible(2, &mut rng);
        let base = random::positive_definite(4, &mut rng);
        let sp = SymplecticSpace::compatible_with_base(&omega, &base).unwrap();
        assert!(sp.invariant_residuals().iter().all(|r| *r < 1e-9));
        // same form as `compatible(omega)`, different inner product
        let x = random::gaussian(4, 1, &mut rng);
        let y = random::gaussian(4, 1, &mut rng);
        let lhs = sp.omega(&x, &y)[(0, 0)];
        let rhs = (y.transpose() * &omega * &x)[(0, 0)];
        let g = sp.metric();
        assert!(linalg::max_abs(&(sp.j().transpose() * g * sp.j() - g)) < 1e-9);
        assert!((lhs - rhs).abs() < 1e-9);
    }
}

#[test]
fn coordinate_lagrangians() {
    let sp = common::space(2);
    let h = sp.horizontal();
    let v = sp.vertical();
    assert!(h.invariant_residuals().iter().all(|r| *r < 1e-12));
    assert!(v.distance(&h.perp()) < 1e-12);
}

#[test]
fn diagonal_line_is_lagrangian() {
    let sp = common::space(1);
    let f = RMat::from_row_slice(2, 1, &[1.0, 1.0]);
    let l = LagrangianFrame::new(&sp, f).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((l.matrix()[(0, 0)] - s).abs() < 1e-15 && (l.matrix()[(1, 0)] - s).abs() < 1e-15);
}

#[test]
fn frames_are_normalized_with_positive_qr_diagonal() {
    let sp = common::space(2);
    let f = RMat::from_row_slice(4, 2, &[-2.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
    let l = LagrangianFrame::new(&sp, f).unwrap();
    // Q R with R = diag(2, 3)
    assert_eq!(l.matrix(), &RMat::from_row_slice(4, 2, &[-1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]));
}

#[test]
fn non_isotropic_and_rank_deficient_frames_are_rejected() {
    let sp = common::space(2);
    let f = RMat::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    assert_eq!(LagrangianFrame::new(&sp, f).unwrap_err().kind(), ErrorKind::Validation);
    let g = RMat::from_row_slice(4, 2, &[1.0, 2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    assert_eq!(LagrangianFrame::new(&sp, g).unwrap_err().kind(), ErrorKind::Validation);
}

#[test]
fn projection_characterization() {
    let mut rng = random::rng(13);
    for n in 1..5 {
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let p = l.projection();
        let j = sp.j();
        assert!(linalg::max_abs(&(j * &p + &p * j - j)) < 1e-9);
        // J(lambda) is the orthogonal complement
        let f = l.matrix();
        assert!(linalg::max_abs(&(f.transpose() * j * f)) < 1e-10);
        assert_eq!(linalg::rank(&linalg::hstack(&[f, &(j * f)]), 1e-8), 2 * n);
    }
}

#[test]
fn graph_of_zero_is_base() {
    let sp = common::space(2);
    let g = SymmetricGenerator::new(sp.horizontal(), RMat::zeros(2, 2)).unwrap();
    assert!(g.graph().distance(&sp.horizontal()) < 1e-14);
}

#[test]
fn graph_over_line() {
    let sp = common::space(1);
    let a = 0.7;
    let g = SymmetricGenerator::new(sp.horizontal(), RMat::from_element(1, 1, a)).unwrap();
    let expected = LagrangianFrame::new(&sp, RMat::from_row_slice(2, 1, &[1.0, a])).unwrap();
    assert!(g.graph().distance(&expected) < 1e-14);
}

#[test]
fn graphs_are_transversal_to_j_lambda() {
    let mut rng = random::rng(14);
    for n in 1..5 {
        let sp = common::space(n);
        let base = random::lagrangian(&sp, &mut rng);
        let g = SymmetricGenerator::new(base.clone(), random::symmetric(n, &mut rng)).unwrap();
        assert_eq!(intersection_dim(&g.graph(), &base.perp(), 1e-8).unwrap(), 0);
    }
}

#[test]
fn asymmetric_generator_is_rejected() {
    let sp = common::space(2);
    let a = RMat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    assert!(SymmetricGenerator::new(sp.horizontal(), a).is_err());
}

#[test]
fn cayley_of_zero_and_scalar() {
    let sp = common::space(1);
    let g0 = SymmetricGenerator::new(sp.horizontal(), RMat::zeros(1, 1)).unwrap();
    assert!((g0.cayley().matrix()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    let g1 = SymmetricGenerator::new(sp.horizontal(), RMat::from_element(1, 1, 1.0)).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    assert!((g1.cayley().matrix()[(0, 0)] - Complex64::new(s, s)).norm() < 1e-15);
}

#[test]
fn cayley_square_identity() {
    let mut rng = random::rng(15);
    let sp = common::space(3);
    let a = random::symmetric(3, &mut rng);
    let g = SymmetricGenerator::new(sp.horizontal(), a.clone()).unwrap();
    let u = g.cayley();
    assert!(linalg::unitarity_residual(u.matrix()) < 1e-10);
    let ac = linalg::to_complex(&a);
    let i = Complex64::new(0.0, 1.0);
    let id = linalg::CMat::identity(3, 3);
    let rhs = (&id * i - &ac) * (&id * i + &ac).try_inverse().unwrap();
    assert!(linalg::norm2_c(&(u.matrix() * u.matrix() - rhs)) < 1e-9);
}

#[test]
fn cayley_image_is_graph() {
    let mut rng = random::rng(16);
    for n in 1..5 {
        let sp = common::space(n);
        let base = random::lagrangian(&sp, &mut rng);
        let g = SymmetricGenerator::new(base.clone(), random::symmetric(n, &mut rng)).unwrap();
        let image = g.cayley_real() * base.matrix();
        assert!(linalg::span_distance(&image, g.graph().matrix()) < 1e-8);
    }
}

#[test]
fn kato_identical_projections() {
    let sp = common::space(2);
    let p = sp.horizontal().projection();
    let w = kato_pair_transform(&p, &p).unwrap();
    assert!(linalg::max_abs(&(w - RMat::identity(4, 4))) < 1e-14);
}

#[test]
fn kato_rotated_line() {
    let p = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let r = RMat::from_row_slice(2, 2, &[c, -s, s, c]);
    let q = &r * &p * r.transpose();
    let w = kato_pair_transform(&p, &q).unwrap();
    assert!(linalg::max_abs(&(&w * &q * w.clone().try_inverse().unwrap() - &p)) < 1e-9);
}

#[test]
fn kato_rejects_far_projections() {
    let sp = common::space(1);
    let p = sp.horizontal().projection();
    let q = sp.vertical().projection();
    assert_eq!(kato_pair_transform(&p, &q).unwrap_err().kind(), ErrorKind::Precondition);
}

/// A Lagrangian at distance exactly `d` from `base`: rotate one direction.
fn lagrangian_at_distance(sp: &Arc<SymplecticSpace>, d: f64, rng: &mut random::SeededRng) -> (RMat, RMat) {
    let n = sp.n();
    let z = random::unitary(n, rng);
    let mut rot = linalg::CMat::identity(n, n);
    rot[(0, 0)] = Complex64::from_polar(1.0, d.asin());
    let a = common::frame_of(sp, &z);
    let b = common::frame_of(sp, &(&z * rot));
    (a.projection(), b.projection())
}

#[test]
fn kato_random_pairs_intertwine() {
    let mut rng = random::rng(17);
    for k in 0..200 {
        let sp = common::space(1 + k % 4);
        let d = if k % 2 == 0 { 0.9 } else { 0.05 + 0.85 * (k as f64 / 200.0) };
        let (p, q) = lagrangian_at_distance(&sp, d, &mut rng);
        assert!((linalg::norm2(&(&p - &q)) - d).abs() < 1e-9);
        let w = kato_pair_transform(&p, &q).unwrap();
        let m = p.nrows();
        assert!(linalg::max_abs(&(w.transpose() * &w - RMat::identity(m, m))) < 1e-10);
        assert!(linalg::max_abs(&(&w * &q - &p * &w)) < 1e-9);
    }
}

#[test]
fn intersection_dim_examples() {
    let sp = common::space(2);
    assert_eq!(intersection_dim(&sp.horizontal(), &sp.horizontal(), 1e-8).unwrap(), 2);
    assert_eq!(intersection_dim(&sp.horizontal(), &sp.vertical(), 1e-8).unwrap(), 0);
    let mut nu = RMat::zeros(4, 2);
    nu[(0, 0)] = 1.0;
    nu[(3, 1)] = 1.0;
    let nu = LagrangianFrame::new(&sp, nu).unwrap();
    assert_eq!(intersection_dim(&sp.horizontal(), &nu, 1e-8).unwrap(), 1);
}

#[test]
fn intersection_dim_rejects_bad_tolerance() {
    let sp = common::space(1);
    assert!(intersection_dim(&sp.horizontal(), &sp.vertical(), 0.0).is_err());
    assert!(intersection_dim(&sp.horizontal(), &sp.vertical(), 0.2).is_err());
}

#[test]
fn general_metric_frames_are_lagrangian() {
    let mut rng = random::rng(18);
    let omega = random::skew_invertible(2, &mut rng);
    let sp = Arc::new(SymplecticSpace::compatible(&omega).unwrap());
    let l = random::lagrangian(&sp, &mut rng);
    assert!(l.invariant_residuals().iter().all(|r| *r < 1e-9));
    assert!(l.distance(&l.perp().perp()) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn intersection_dim_matches_column_rank(seed in any::<u64>(), n in 1usize..5, shared in 0usize..4) {
        let mut rng = random::rng(seed);
        let sp = common::space(n);
        let shared = shared.min(n);
        // mu shares `shared` directions of a unitary frame with nu
        let z = random::unitary(n, &mut rng);
        let mut d = linalg::CMat::identity(n, n);
        for j in shared..n {
            d[(j, j)] = Complex64::from_polar(1.0, 0.3 + 2.5 * rng.random::<f64>());
        }
        let mu = common::frame_of(&sp, &z);
        let nu = common::frame_of(&sp, &(&z * d));
        let k = intersection_dim(&mu, &nu, 1e-8).unwrap();
        prop_assert_eq!(k, shared);
        let r = linalg::rank(&linalg::hstack(&[mu.matrix(), nu.matrix()]), 1e-8);
        prop_assert_eq!(k, 2 * n - r);
    }

    #[test]
    fn lagrangian_perp_is_orthogonal_complement(seed in any::<u64>(), n in 1usize..6) {
        let mut rng = random::rng(seed);
        let sp = common::space(n);
        let l = random::lagrangian(&sp, &mut rng);
        let p = l.projection() + l.perp().projection();
        prop_assert!(linalg::max_abs(&(p - RMat::identity(2 * n, 2 * n))) < 1e-10);
    }
}
