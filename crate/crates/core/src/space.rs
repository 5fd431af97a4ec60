//! Symplectic vector spaces with a compatible complex structure, Lagrangian
//! frames, local charts and the auxiliary constructions built on them.

use std::sync::Arc;

use nalgebra::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::souriau::UnitaryMatrix;

/// `R^{2n}` with a complex structure `J` and a compatible inner product `G`.
/// The symplectic form is `omega(u, v) = u^T J^T G v`.
#[derive(Debug, Clone)]
pub struct SymplecticSpace {
    n: usize,
    j: RMat,
    metric: RMat,
    standard: bool,
    /// Columns `f_1..f_n, Jf_1..Jf_n`, orthonormal for `G`.
    from_std: RMat,
    to_std: RMat,
    sqrt_metric: RMat,
    inv_sqrt_metric: RMat,
}

/// `[[0, -I], [I, 0]]`.
pub fn standard_j(n: usize) -> RMat {
    let mut j = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(n + i, i)] = 1.0;
        j[(i, n + i)] = -1.0;
    }
    j
}

impl SymplecticSpace {
    pub fn standard(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("half-dimension must be positive", "n"));
        }
        let id = RMat::identity(2 * n, 2 * n);
        Ok(SymplecticSpace {
            n,
            j: standard_j(n),
            metric: id.clone(),
            standard: true,
            from_std: id.clone(),
            to_std: id.clone(),
            sqrt_metric: id.clone(),
            inv_sqrt_metric: id,
        })
    }

    /// Builds the compatible structure of a skew form given as the operator `A`
    /// with `omega(x, y) = (A x, y)`: `G = |A|`, `J = |A|^{-1} A`.
    pub fn compatible(omega: &RMat) -> Result<Self> {
        let (j, g) = polar_structure(omega)?;
        Self::from_parts(j, g)
    }

    /// As [`SymplecticSpace::compatible`], with `(., .)` taken to be the inner
    /// product with Gram matrix `base` instead of the Euclidean one.
    pub fn compatible_with_base(omega: &RMat, base: &RMat) -> Result<Self> {
        let m = omega.nrows();
        if base.shape() != (m, m) || omega.ncols() != m {
            return Err(Error::invalid("shape mismatch", "base"));
        }
        let l = Cholesky::new(linalg::symmetrize(base))
            .ok_or_else(|| Error::invalid("base inner product is not positive definite", "base"))?
            .l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::invalid("base inner product is singular", "base"))?;
        // The form x^T omega^T y in coordinates x = L^{-T} xh.
        let a_hat = &l_inv * omega * l_inv.transpose();
        let (jh, gh) = polar_structure(&a_hat)?;
        let j = l_inv.transpose() * jh * l.transpose();
        let g = &l * gh * l.transpose();
        Self::from_parts(j, linalg::symmetrize(&g))
    }

    /// Validates `(J, G)` and precomputes the isometry to the standard model.
    pub fn from_parts(j: RMat, metric: RMat) -> Result<Self> {
        let m = j.nrows();
        if m == 0 || m % 2 != 0 || j.ncols() != m || metric.shape() != (m, m) {
            return Err(Error::invalid("J and G must be square of even size", "structure"));
        }
        if !linalg::is_finite(&j) || !linalg::is_finite(&metric) {
            return Err(Error::invalid("non-finite entries", "structure"));
        }
        let n = m / 2;
        let scale = linalg::norm2(&metric).max(1.0);
        let tol = 1e-9 * scale;
        let id = RMat::identity(m, m);
        if linalg::max_abs(&(&j * &j + &id)) > 1e-9 {
            return Err(Error::invalid("J^2 != -I", "structure"));
        }
        if linalg::max_abs(&(&metric - metric.transpose())) > tol {
            return Err(Error::invalid("metric is not symmetric", "structure"));
        }
        if linalg::max_abs(&(j.transpose() * &metric * &j - &metric)) > tol {
            return Err(Error::invalid("J is not orthogonal for the metric", "structure"));
        }
        let metric = linalg::symmetrize(&metric);
        let (vals, _) = linalg::sym_eigen(&metric);
        if vals[0] <= 1e-12 * scale {
            return Err(Error::invalid("metric is not positive definite", "structure"));
        }
        let sqrt_metric = linalg::sym_fn(&metric, f64::sqrt);
        let inv_sqrt_metric = linalg::sym_fn(&metric, |v| 1.0 / v.sqrt());
        let from_std = unitary_basis(&j, &metric, n)?;
        let to_std = from_std
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::numerical("unitary basis is singular"))?;
        let standard = linalg::max_abs(&(&j - standard_j(n))) == 0.0 && linalg::max_abs(&(&metric - &id)) == 0.0;
        Ok(SymplecticSpace { n, j, metric, standard, from_std, to_std, sqrt_metric, inv_sqrt_metric })
    }

    /// Orthogonal direct sum; `J` and `G` are block diagonal.
    pub fn direct_sum(a: &SymplecticSpace, b: &SymplecticSpace) -> Result<Self> {
        Self::from_parts(linalg::block_diag(&a.j, &b.j), linalg::block_diag(&a.metric, &b.metric))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn j(&self) -> &RMat {
        &self.j
    }

    pub fn metric(&self) -> &RMat {
        &self.metric
    }

    pub fn is_standard(&self) -> bool {
        self.standard
    }

    /// Gram matrix of omega: `J^T G`.
    pub fn omega_gram(&self) -> RMat {
        self.j.transpose() * &self.metric
    }

    pub fn omega(&self, u: &RMat, v: &RMat) -> RMat {
        u.transpose() * self.j.transpose() * &self.metric * v
    }

    /// Linear isometry onto the standard model: `T J T^{-1} = J_std`, `T^T T = G`.
    pub fn to_std(&self) -> &RMat {
        &self.to_std
    }

    pub fn from_std(&self) -> &RMat {
        &self.from_std
    }

    /// Residuals of `J^2 = -I`, `J^T G J = G` and skewness of the omega Gram matrix.
    pub fn invariant_residuals(&self) -> [f64; 3] {
        let m = self.dim();
        let id = RMat::identity(m, m);
        let gram = self.omega_gram();
        [
            linalg::max_abs(&(&self.j * &self.j + &id)),
            linalg::max_abs(&(self.j.transpose() * &self.metric * &self.j - &self.metric)),
            linalg::max_abs(&(&gram + gram.transpose())),
        ]
    }

    /// `span(f_1..f_n)` for the unitary basis; `[I; 0]` in the standard space.
    pub fn horizontal(self: &Arc<Self>) -> LagrangianFrame {
        LagrangianFrame { space: self.clone(), f: self.from_std.columns(0, self.n).into_owned() }
    }

    /// `J` of the horizontal subspace; `[0; I]` in the standard space.
    pub fn vertical(self: &Arc<Self>) -> LagrangianFrame {
        LagrangianFrame { space: self.clone(), f: self.from_std.columns(self.n, self.n).into_owned() }
    }

    fn same(&self, other: &SymplecticSpace) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n && self.j == other.j && self.metric == other.metric)
    }
}

fn polar_structure(omega: &RMat) -> Result<(RMat, RMat)> {
    let m = omega.nrows();
    if m == 0 || m % 2 != 0 || omega.ncols() != m {
        return Err(Error::invalid("Omega must be square of even size", "Omega"));
    }
    if !linalg::is_finite(omega) {
        return Err(Error::invalid("non-finite entries", "Omega"));
    }
    let scale = linalg::max_abs(omega).max(1.0);
    if linalg::max_abs(&(omega + omega.transpose())) > 1e-10 * scale {
        return Err(Error::invalid("Omega is not skew-symmetric", "Omega"));
    }
    let a = (omega - omega.transpose()) * 0.5;
    let sv = a.clone().singular_values();
    if sv.min() <= 1e-10 {
        return Err(Error::invalid("Omega is singular", "Omega"));
    }
    let ata = a.transpose() * &a;
    let abs_a = linalg::sym_fn(&ata, f64::sqrt);
    let inv_abs = linalg::sym_fn(&ata, |v| 1.0 / v.sqrt());
    Ok((inv_abs * a, abs_a))
}

/// Complex Gram-Schmidt: vectors `f_k` with `{f_k, J f_k}` orthonormal for `G`.
fn unitary_basis(j: &RMat, g: &RMat, n: usize) -> Result<RMat> {
    let m = 2 * n;
    let ip = |x: &RMat, y: &RMat| (x.transpose() * g * y)[(0, 0)];
    let mut fs: Vec<RMat> = Vec::with_capacity(n);
    let mut jfs: Vec<RMat> = Vec::with_capacity(n);
    for i in 0..m {
        if fs.len() == n {
            break;
        }
        let mut v = RMat::zeros(m, 1);
        v[(i, 0)] = 1.0;
        for _ in 0..2 {
            for (f, jf) in fs.iter().zip(&jfs) {
                let a = ip(&v, f);
                let b = ip(&v, jf);
                v -= f * a + jf * b;
            }
        }
        let norm = ip(&v, &v).sqrt();
        if norm > 1e-6 {
            let f = v / norm;
            jfs.push(j * &f);
            fs.push(f);
        }
    }
    if fs.len() != n {
        return Err(Error::numerical("failed to build a unitary basis"));
    }
    let mut b = RMat::zeros(m, m);
    for k in 0..n {
        b.set_column(k, &fs[k].column(0));
        b.set_column(n + k, &jfs[k].column(0));
    }
    Ok(b)
}

/// A Lagrangian subspace represented by a `G`-orthonormal `2n x n` basis.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    space: Arc<SymplecticSpace>,
    f: RMat,
}

impl LagrangianFrame {
    /// Re-orthonormalizes `f` (thin QR in the metric, positive diagonal) and
    /// validates isotropy.
    pub fn new(space: &Arc<SymplecticSpace>, f: RMat) -> Result<Self> {
        Self::with_tolerance(space, f, 1e-8)
    }

    pub fn with_tolerance(space: &Arc<SymplecticSpace>, f: RMat, isotropy_tol: f64) -> Result<Self> {
        let n = space.n;
        if f.shape() != (2 * n, n) {
            return Err(Error::invalid(
                format!("frame must be {}x{}, got {}x{}", 2 * n, n, f.nrows(), f.ncols()),
                "frame",
            ));
        }
        if !linalg::is_finite(&f) {
            return Err(Error::invalid("non-finite entries", "frame"));
        }
        let w = &space.sqrt_metric * &f;
        let (q, r) = linalg::thin_qr(&w);
        let diag_max = (0..n).fold(0.0f64, |a, i| a.max(r[(i, i)].abs()));
        let diag_min = (0..n).fold(f64::INFINITY, |a, i| a.min(r[(i, i)].abs()));
        if diag_max == 0.0 || diag_min <= 1e-8 * diag_max {
            return Err(Error::invalid("frame is rank deficient", "frame"));
        }
        let f = &space.inv_sqrt_metric * q;
        let iso = linalg::max_abs(&space.omega(&f, &f));
        if iso > isotropy_tol {
            return Err(Error::invalid(format!("frame is not isotropic (defect {iso:.3e})"), "frame"));
        }
        Ok(LagrangianFrame { space: space.clone(), f })
    }

    /// Frame from a unitary `Z` in standard coordinates: columns of `[Re Z; Im Z]`.
    pub fn from_unitary(space: &Arc<SymplecticSpace>, z: &linalg::CMat) -> Result<Self> {
        let std = linalg::vstack(&[&linalg::re(z), &linalg::im(z)]);
        Self::new(space, space.from_std() * std)
    }

    pub(crate) fn from_orthonormal(space: &Arc<SymplecticSpace>, f: RMat) -> Self {
        LagrangianFrame { space: space.clone(), f }
    }

    pub fn space(&self) -> &Arc<SymplecticSpace> {
        &self.space
    }

    pub fn matrix(&self) -> &RMat {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.space.n
    }

    /// `P = F F^T G`, the `G`-orthogonal projection onto the span.
    pub fn projection(&self) -> RMat {
        &self.f * self.f.transpose() * &self.space.metric
    }

    /// `J(span F)`, which is the orthogonal complement.
    pub fn perp(&self) -> LagrangianFrame {
        LagrangianFrame { space: self.space.clone(), f: &self.space.j * &self.f }
    }

    /// Coordinates of the span in the standard model.
    pub fn std_matrix(&self) -> RMat {
        &self.space.to_std * &self.f
    }

    /// Unitary `X + iY` whose columns `[X; Y]` span this subspace in standard
    /// coordinates.
    pub fn std_unitary(&self) -> linalg::CMat {
        linalg::to_complex_columns(&self.std_matrix())
    }

    /// Residuals of orthonormality, isotropy and `J = JP + PJ`.
    pub fn invariant_residuals(&self) -> [f64; 3] {
        let n = self.n();
        let p = self.projection();
        let j = &self.space.j;
        [
            linalg::max_abs(&(self.f.transpose() * &self.space.metric * &self.f - RMat::identity(n, n))),
            linalg::max_abs(&self.space.omega(&self.f, &self.f)),
            linalg::max_abs(&(j * &p + &p * j - j)),
        ]
    }

    pub fn same_space(&self, other: &LagrangianFrame) -> bool {
        self.space.same(&other.space)
    }

    pub fn ensure_same_space(&self, other: &LagrangianFrame, location: &str) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::invalid("frames live in different spaces", location))
        }
    }

    /// Largest principal angle to another frame, measured in the metric.
    pub fn distance(&self, other: &LagrangianFrame) -> f64 {
        let a = &self.space.sqrt_metric * &self.f;
        let b = &self.space.sqrt_metric * &other.f;
        linalg::max_principal_angle(&a, &b)
    }
}

/// `dim(mu ∩ nu)` as the number of singular values of `P_mu + P_nu` below `tol`.
pub fn intersection_dim(mu: &LagrangianFrame, nu: &LagrangianFrame, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 0.1) {
        return Err(Error::invalid("tolerance must lie in (0, 0.1)", "tol"));
    }
    mu.ensure_same_space(nu, "nu")?;
    let s = &mu.space.sqrt_metric;
    let si = &mu.space.inv_sqrt_metric;
    // Conjugate by G^{1/2} so that the sum of projections is symmetric.
    let sum = s * (mu.projection() + nu.projection()) * si;
    let sv = sum.singular_values();
    Ok(sv.iter().filter(|&&v| v < tol).count())
}

/// Local chart `G_lambda(A) = {x + J A x : x in lambda}` around a base frame.
#[derive(Debug, Clone)]
pub struct SymmetricGenerator {
    base: LagrangianFrame,
    a: RMat,
}

impl SymmetricGenerator {
    pub fn new(base: LagrangianFrame, a: RMat) -> Result<Self> {
        let n = base.n();
        if a.shape() != (n, n) {
            return Err(Error::invalid("generator must be n x n", "A"));
        }
        let scale = linalg::max_abs(&a).max(1.0);
        if linalg::max_abs(&(&a - a.transpose())) > 1e-12 * scale {
            return Err(Error::invalid("generator is not symmetric", "A"));
        }
        let a = linalg::symmetrize(&a);
        Ok(SymmetricGenerator { base, a })
    }

    pub fn base(&self) -> &LagrangianFrame {
        &self.base
    }

    pub fn a(&self) -> &RMat {
        &self.a
    }

    pub fn graph(&self) -> LagrangianFrame {
        let f = self.base.matrix();
        let jf = self.base.space.j() * f;
        let g = f + jf * &self.a;
        LagrangianFrame::new(self.base.space(), g).expect("graph of a symmetric map is Lagrangian")
    }

    /// `U_A = (I + iA)(I + A^2)^{-1/2}` acting on `lambda ⊗ C`, written in the
    /// basis given by the base frame.
    pub fn cayley(&self) -> UnitaryMatrix {
        let n = self.a.nrows();
        let x = linalg::sym_fn(&(&self.a * &self.a + RMat::identity(n, n)), |v| 1.0 / v.sqrt());
        let y = &self.a * &x;
        let u = linalg::CMat::from_fn(n, n, |i, j| num_complex::Complex64::new(x[(i, j)], y[(i, j)]));
        UnitaryMatrix::new_unchecked(u)
    }

    /// The Cayley unitary as a real operator on the whole space.
    pub fn cayley_real(&self) -> RMat {
        let f = self.base.matrix();
        let sp = self.base.space();
        let b = linalg::hstack(&[f, &(sp.j() * f)]);
        let b_inv = b.transpose() * sp.metric();
        b * linalg::realify(self.cayley().matrix()) * b_inv
    }
}

/// Kato's intertwiner `W = D((I-P)(I-Q) + PQ)`, `D = (I - (P-Q)^2)^{-1/2}`,
/// for symmetric projections with `||P - Q|| < 1`; satisfies `W Q = P W`.
pub fn kato_pair_transform(p: &RMat, q: &RMat) -> Result<RMat> {
    let m = p.nrows();
    if p.shape() != (m, m) || q.shape() != (m, m) {
        return Err(Error::invalid("projections must be square of equal size", "P"));
    }
    for (name, x) in [("P", p), ("Q", q)] {
        if linalg::max_abs(&(x - x.transpose())) > 1e-10 || linalg::max_abs(&(x * x - x)) > 1e-9 {
            return Err(Error::invalid("not a symmetric projection", name));
        }
    }
    let d = p - q;
    if linalg::norm2(&d) > 1.0 - 1e-6 {
        return Err(Error::precondition("||P - Q|| must be below 1", "P"));
    }
    let id = RMat::identity(m, m);
    let dmat = linalg::sym_fn(&(&id - &d * &d), |v| 1.0 / v.sqrt());
    Ok(dmat * ((&id - p) * (&id - q) + p * q))
}
