//! Dense helpers shared by every module: symmetric and unitary spectral
//! decompositions, null spaces, signatures, complexification.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

const SCHUR_EPS: f64 = 1e-15;
const SCHUR_MAX_ITER: usize = 10_000;

/// Spectral norm (largest singular value).
pub fn norm2(m: &RMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn norm2_c(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

pub fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues ascending with matching eigenvector columns.
pub fn sym_eigen(m: &RMat) -> (Vec<f64>, RMat) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = RMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Applies `f` to the spectrum of a symmetric matrix.
pub fn sym_fn(m: &RMat, f: impl Fn(f64) -> f64) -> RMat {
    let (vals, vecs) = sym_eigen(m);
    let d = RMat::from_diagonal(&DVector::from_iterator(vals.len(), vals.iter().map(|&v| f(v))));
    &vecs * d * vecs.transpose()
}

pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(m));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (vals, vecs)
}

/// Inertia of a symmetric or Hermitian spectrum: eigenvalues with modulus at most
/// `rel_tol * max|eig|` are counted as null.
pub fn inertia(eigs: &[f64], rel_tol: f64) -> (usize, usize, usize) {
    inertia_with_floor(eigs, rel_tol, 0.0)
}

/// As [`inertia`], with the reference scale raised to at least `floor`, so
/// that a form vanishing up to roundoff is reported as null.
pub fn inertia_with_floor(eigs: &[f64], rel_tol: f64, floor: f64) -> (usize, usize, usize) {
    let scale = eigs.iter().fold(floor, |a, &v| a.max(v.abs()));
    let cut = rel_tol * scale;
    let mut p = 0;
    let mut q = 0;
    let mut z = 0;
    for &v in eigs {
        if scale == 0.0 || v.abs() <= cut {
            z += 1;
        } else if v > 0.0 {
            p += 1;
        } else {
            q += 1;
        }
    }
    (p, q, z)
}

/// Singular values in descending order together with the full right singular
/// basis (columns of V), also for wide matrices.
pub fn svd_full(m: &RMat) -> (Vec<f64>, RMat) {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = RMat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    (sv, vt.transpose())
}

pub fn svd_full_c(m: &CMat) -> (Vec<f64>, CMat) {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = CMat::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("v_t requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    (sv, vt.adjoint())
}

/// Numerical rank relative to the largest singular value.
pub fn rank(m: &RMat, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let top = sv.max();
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Orthonormal basis of the right null space: the `k` right singular vectors
/// belonging to the smallest singular values.
pub fn null_basis(m: &RMat, k: usize) -> RMat {
    let (_, v) = svd_full(m);
    let c = v.ncols();
    v.columns(c - k, k).into_owned()
}

pub fn null_basis_c(m: &CMat, k: usize) -> CMat {
    let (_, v) = svd_full_c(m);
    let c = v.ncols();
    v.columns(c - k, k).into_owned()
}

/// Null space with dimension decided by an absolute singular-value threshold.
pub fn null_space(m: &RMat, tol: f64) -> RMat {
    let (sv, v) = svd_full(m);
    let c = v.ncols();
    let small = (0..c).filter(|&i| sv.get(i).copied().unwrap_or(0.0) <= tol).count();
    v.columns(c - small, small).into_owned()
}

/// Thin QR with the diagonal of R made non-negative.
pub fn thin_qr(m: &RMat) -> (RMat, RMat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..r.nrows() {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
            r.row_mut(j).neg_mut();
        }
    }
    (q, r)
}

/// Orthonormal basis of the column span of the leading `k` left singular vectors.
pub fn orth(m: &RMat, k: usize) -> RMat {
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("u requested");
    u.columns(0, k).into_owned()
}

/// Cosines of principal angles between two column spans with orthonormal bases.
pub fn principal_cosines(a: &RMat, b: &RMat) -> Vec<f64> {
    let m = a.transpose() * b;
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Largest principal angle between the spans of two orthonormal bases.
pub fn span_distance(a: &RMat, b: &RMat) -> f64 {
    let a = orth(a, a.ncols());
    let b = orth(b, b.ncols());
    if a.ncols() != b.ncols() {
        return std::f64::consts::FRAC_PI_2;
    }
    max_principal_angle(&a, &b)
}

/// Largest principal angle between equal-dimensional spans with orthonormal
/// bases. Small angles come from the sine `||(I - B B^T) A||`, which keeps
/// full relative accuracy where `acos` of the cosine does not.
pub fn max_principal_angle(a: &RMat, b: &RMat) -> f64 {
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = a - b * (b.transpose() * a);
    let sin = norm2(&resid).min(1.0);
    if sin < 0.5 {
        sin.asin()
    } else {
        let cos = principal_cosines(a, b);
        cos.last().map(|c| c.clamp(-1.0, 1.0).acos()).unwrap_or(0.0)
    }
}

/// [[A, -B], [B, A]] -> A + iB.
pub fn complexify(m: &RMat) -> CMat {
    let n = m.nrows() / 2;
    CMat::from_fn(n, n, |i, j| Complex64::new(m[(i, j)], m[(n + i, j)]))
}

/// A + iB -> [[A, -B], [B, A]].
pub fn realify(m: &CMat) -> RMat {
    let n = m.nrows();
    let mut r = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            r[(i, j)] = z.re;
            r[(n + i, n + j)] = z.re;
            r[(n + i, j)] = z.im;
            r[(i, n + j)] = -z.im;
        }
    }
    r
}

/// Real 2n vector (x, y) -> complex n vector x + iy, columnwise.
pub fn to_complex_columns(m: &RMat) -> CMat {
    let n = m.nrows() / 2;
    CMat::from_fn(n, m.ncols(), |i, j| Complex64::new(m[(i, j)], m[(n + i, j)]))
}

pub fn to_complex(m: &RMat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn re(m: &CMat) -> RMat {
    m.map(|z| z.re)
}

pub fn im(m: &CMat) -> RMat {
    m.map(|z| z.im)
}

/// Eigen-decomposition of a normal complex matrix via the complex Schur form.
/// Returns eigenvalues and orthonormal eigenvector columns.
pub fn normal_eigen(m: &CMat) -> Result<(Vec<Complex64>, CMat)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    // the QR iteration occasionally stalls at machine precision; loosen the
    // deflation threshold and rotate the spectrum before giving up
    for (k, eps) in [SCHUR_EPS, 1e-14, 1e-13].into_iter().enumerate() {
        let rot = Complex64::from_polar(1.0, 0.3 * k as f64);
        if let Some(schur) = Schur::try_new(m * rot, eps, SCHUR_MAX_ITER) {
            let (q, t) = schur.unpack();
            let vals = (0..n).map(|i| t[(i, i)] / rot).collect();
            return Ok((vals, q));
        }
    }
    Err(Error::numerical("complex Schur iteration did not converge"))
}

/// Eigenvalues of a unitary matrix as phases in [0, 2pi).
pub fn eigenphases(u: &CMat) -> Result<Vec<f64>> {
    let (vals, _) = normal_eigen(u)?;
    let mut ph: Vec<f64> = vals.iter().map(|z| canonical_phase(z.arg())).collect();
    ph.sort_by(|a, b| a.total_cmp(b));
    Ok(ph)
}

pub fn canonical_phase(phi: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let p = phi.rem_euclid(tau);
    if p >= tau {
        0.0
    } else {
        p
    }
}

/// Principal logarithm of a unitary matrix. Errors when an eigenvalue lies
/// within `cut_tol` (radians) of the negative real axis.
pub fn unitary_log(u: &CMat, cut_tol: f64) -> Result<CMat> {
    let (vals, q) = normal_eigen(u)?;
    let mut logs = Vec::with_capacity(vals.len());
    for z in &vals {
        let a = z.arg();
        if std::f64::consts::PI - a.abs() < cut_tol {
            return Err(Error::precondition(
                "eigenvalue on the branch cut of the principal logarithm",
                "log",
            ));
        }
        logs.push(Complex64::new(z.norm().ln(), a));
    }
    let d = CMat::from_diagonal(&DVector::from_vec(logs));
    Ok(&q * d * q.adjoint())
}

/// Matrix exponential of a real matrix.
pub fn expm(m: &RMat) -> RMat {
    m.exp()
}

pub fn expm_c(m: &CMat) -> CMat {
    m.exp()
}

pub fn unitarity_residual(u: &CMat) -> f64 {
    let n = u.nrows();
    norm2_c(&(u.adjoint() * u - CMat::identity(n, n)))
}

pub fn block_diag(a: &RMat, b: &RMat) -> RMat {
    let mut m = RMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

pub fn hstack(blocks: &[&RMat]) -> RMat {
    let rows = blocks[0].nrows();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = RMat::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        m.view_mut((0, c), b.shape()).copy_from(*b);
        c += b.ncols();
    }
    m
}

pub fn vstack(blocks: &[&RMat]) -> RMat {
    let cols = blocks[0].ncols();
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = RMat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        m.view_mut((r, 0), b.shape()).copy_from(*b);
        r += b.nrows();
    }
    m
}

pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
}

pub fn is_finite(m: &RMat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Inertia of a symmetric or Hermitian form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct SignatureResult {
    pub positives: usize,
    pub negatives: usize,
    pub nulls: usize,
}

impl SignatureResult {
    pub fn signature(&self) -> i64 {
        self.positives as i64 - self.negatives as i64
    }

    pub fn dim(&self) -> usize {
        self.positives + self.negatives + self.nulls
    }

    /// Eigenvalues with modulus at most `rel_tol * ||m||` count as null.
    pub fn of_symmetric(m: &RMat, rel_tol: f64) -> Self {
        let (vals, _) = sym_eigen(m);
        Self::from_eigenvalues(&vals, rel_tol)
    }

    pub fn of_hermitian(m: &CMat, rel_tol: f64) -> Self {
        let (vals, _) = herm_eigen(m);
        Self::from_eigenvalues(&vals, rel_tol)
    }

    pub fn from_eigenvalues(vals: &[f64], rel_tol: f64) -> Self {
        Self::from_eigenvalues_with_floor(vals, rel_tol, 0.0)
    }

    pub fn from_eigenvalues_with_floor(vals: &[f64], rel_tol: f64, floor: f64) -> Self {
        let (positives, negatives, nulls) = inertia_with_floor(vals, rel_tol, floor);
        SignatureResult { positives, negatives, nulls }
    }
}
