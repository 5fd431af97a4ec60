//! The Souriau map `S_lambda(mu) = (I - 2P_mu)(2P_lambda - I)` as a complex
//! unitary, its inverse, and the `-1`-eigenspace bridge to intersections.
//!
//! Complexification convention: a real operator commuting with `J_std`,
//! written in the basis `(e_1..e_n, Je_1..Je_n)`, has blocks `[[A, -B], [B, A]]`
//! and corresponds to `A + iB`. Spaces with a general metric are first mapped
//! to the standard model by their unitary basis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::space::{LagrangianFrame, SymplecticSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    m: CMat,
}

impl UnitaryMatrix {
    pub fn new(m: CMat) -> Result<Self> {
        Self::with_tolerance(m, 1e-9)
    }

    pub fn with_tolerance(m: CMat, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::invalid("unitary must be square and non-empty", "U"));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid("non-finite entries", "U"));
        }
        let r = linalg::unitarity_residual(&m);
        if r > tol {
            return Err(Error::invalid(format!("matrix is not unitary (residual {r:.3e})"), "U"));
        }
        Ok(UnitaryMatrix { m })
    }

    pub(crate) fn new_unchecked(m: CMat) -> Self {
        UnitaryMatrix { m }
    }

    pub fn identity(n: usize) -> Self {
        UnitaryMatrix { m: CMat::identity(n, n) }
    }

    /// `diag(e^{i phi_k})`.
    pub fn diagonal(phases: &[f64]) -> Self {
        let n = phases.len();
        let mut m = CMat::zeros(n, n);
        for (k, &p) in phases.iter().enumerate() {
            m[(k, k)] = Complex64::from_polar(1.0, p);
        }
        UnitaryMatrix { m }
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn size(&self) -> usize {
        self.m.nrows()
    }

    pub fn adjoint(&self) -> Self {
        UnitaryMatrix { m: self.m.adjoint() }
    }

    pub fn mul(&self, other: &UnitaryMatrix) -> Self {
        UnitaryMatrix { m: &self.m * &other.m }
    }

    pub fn det(&self) -> Complex64 {
        self.m.clone().determinant()
    }

    /// Eigenvalue phases sorted in `[0, 2pi)`.
    pub fn eigenphases(&self) -> Result<Vec<f64>> {
        linalg::eigenphases(&self.m)
    }

    pub fn distance(&self, other: &UnitaryMatrix) -> f64 {
        linalg::norm2_c(&(&self.m - &other.m))
    }
}

/// `tau_lambda = 2 P_lambda - I`.
pub fn reflection(lambda: &LagrangianFrame) -> RMat {
    let m = lambda.space().dim();
    lambda.projection() * 2.0 - RMat::identity(m, m)
}

/// The real operator `(I - 2P_mu)(2P_lambda - I)` on the space itself.
pub fn souriau_real(lambda: &LagrangianFrame, mu: &LagrangianFrame) -> Result<RMat> {
    lambda.ensure_same_space(mu, "mu")?;
    Ok(-reflection(mu) * reflection(lambda))
}

pub fn souriau(lambda: &LagrangianFrame, mu: &LagrangianFrame) -> Result<UnitaryMatrix> {
    let s = souriau_real(lambda, mu)?;
    let space = lambda.space();
    let j = space.j();
    let comm = linalg::max_abs(&(&s * j - j * &s));
    if comm > 1e-9 {
        return Err(Error::invalid(format!("Souriau operator does not commute with J ({comm:.3e})"), "mu"));
    }
    let std = if space.is_standard() { s } else { space.to_std() * s * space.from_std() };
    Ok(UnitaryMatrix::new_unchecked(linalg::complexify(&std)))
}

/// The real operator on the space represented by a unitary in standard coordinates.
pub fn unitary_to_real(space: &SymplecticSpace, w: &UnitaryMatrix) -> RMat {
    let r = linalg::realify(w.matrix());
    if space.is_standard() {
        r
    } else {
        space.from_std() * r * space.to_std()
    }
}

/// Number of eigenvalues within angular distance `tol` of `-1`.
pub fn kernel_dim_minus_one(w: &UnitaryMatrix, tol: f64) -> Result<usize> {
    if !(tol > 0.0 && tol < 0.5) {
        return Err(Error::invalid("tolerance must lie in (0, 0.5)", "tol"));
    }
    let ph = w.eigenphases()?;
    Ok(ph.iter().filter(|&&p| (p - PI).abs() <= tol).count())
}

/// Inverse of the Souriau map: the Lagrangian `mu` with `souriau(lambda, mu) = w`,
/// found as the real kernel of `I + W tau_lambda`.
pub fn lagrangian_from_souriau(lambda: &LagrangianFrame, w: &UnitaryMatrix) -> Result<LagrangianFrame> {
    let space: &Arc<SymplecticSpace> = lambda.space();
    let n = space.n();
    if w.size() != n {
        return Err(Error::invalid("unitary size does not match the space", "W"));
    }
    let wr = unitary_to_real(space, w);
    let k = RMat::identity(2 * n, 2 * n) + wr * reflection(lambda);
    let (sv, v) = linalg::svd_full(&k);
    let tol = 1e-7;
    let small = sv.iter().filter(|&&s| s <= tol).count();
    if small != n {
        return Err(Error::invalid(
            format!("unitary is not in the Souriau image (kernel dimension {small}, expected {n})"),
            "W",
        ));
    }
    LagrangianFrame::new(space, v.columns(n, n).into_owned())
}
