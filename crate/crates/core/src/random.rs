//! Seeded random objects for probe searches, fixtures and tests.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat, RMat};
use crate::space::{standard_j, LagrangianFrame, SymplecticSpace};

pub use rand::SeedableRng;
pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> RMat {
    RMat::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_c(rows: usize, cols: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

pub fn symmetric(n: usize, rng: &mut impl Rng) -> RMat {
    linalg::symmetrize(&gaussian(n, n, rng))
}

/// Haar-distributed unitary (QR of a complex Gaussian with phase correction).
pub fn unitary(n: usize, rng: &mut impl Rng) -> CMat {
    let qr = gaussian_c(n, n, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let mut col = q.column_mut(j);
        col *= ph;
    }
    q
}

pub fn orthogonal(n: usize, rng: &mut impl Rng) -> RMat {
    let (q, _) = linalg::thin_qr(&gaussian(n, n, rng));
    q
}

pub fn lagrangian(space: &Arc<SymplecticSpace>, rng: &mut impl Rng) -> LagrangianFrame {
    LagrangianFrame::from_unitary(space, &unitary(space.n(), rng)).expect("unitary columns span a Lagrangian")
}

/// Random skew-symmetric matrix of size `2n` with singular values bounded away from 0.
pub fn skew_invertible(n: usize, rng: &mut impl Rng) -> RMat {
    loop {
        let a = gaussian(2 * n, 2 * n, rng);
        let s = (&a - a.transpose()) * 0.5;
        if s.clone().singular_values().min() > 1e-2 {
            return s;
        }
    }
}

/// Random positive definite matrix with eigenvalues in `[0.5, 2]`.
pub fn positive_definite(m: usize, rng: &mut impl Rng) -> RMat {
    let q = orthogonal(m, rng);
    let d = RMat::from_diagonal(&nalgebra::DVector::from_fn(m, |_, _| rng.random_range(0.5..2.0)));
    linalg::symmetrize(&(&q * d * q.transpose()))
}

/// Random symplectic matrix `exp(J_std S)` with `S` symmetric of norm `scale`.
pub fn symplectic(n: usize, scale: f64, rng: &mut impl Rng) -> RMat {
    let s = symmetric(2 * n, rng);
    let s = &s * (scale / linalg::norm2(&s).max(1e-12));
    linalg::expm(&(standard_j(n) * s))
}
