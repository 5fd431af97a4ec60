//! The diagonal trick in `H ⊞ H`, the embedding `Lambda(H_0) -> Lambda(H_0 ⊕ H_1)`
//! and the reduction `gamma` along a pair of polarized spaces.

use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::maslov::{self, IndexReport};
use crate::path::{LagrangianPath, Path, Refiner};
use crate::space::{intersection_dim, LagrangianFrame, SymplecticSpace};
use crate::tol::Tolerances;

/// `H ⊞ H` with form `omega ⊖ omega`, realized by `J ⊕ (-J)` and `G ⊕ G`.
#[derive(Debug, Clone)]
pub struct BoxSpace {
    base: Arc<SymplecticSpace>,
    space: Arc<SymplecticSpace>,
    diagonal: LagrangianFrame,
}

impl BoxSpace {
    pub fn new(base: &Arc<SymplecticSpace>) -> Result<Self> {
        let j = linalg::block_diag(base.j(), &(-base.j()));
        let g = linalg::block_diag(base.metric(), base.metric());
        let space = Arc::new(SymplecticSpace::from_parts(j, g)?);
        let m = base.dim();
        let id = RMat::identity(m, m);
        let diagonal = LagrangianFrame::new(&space, linalg::vstack(&[&id, &id]).columns(0, m).into_owned())?;
        Ok(BoxSpace { base: base.clone(), space, diagonal })
    }

    pub fn base(&self) -> &Arc<SymplecticSpace> {
        &self.base
    }

    pub fn space(&self) -> &Arc<SymplecticSpace> {
        &self.space
    }

    pub fn diagonal(&self) -> &LagrangianFrame {
        &self.diagonal
    }

    /// `mu ⊞ lambda` as a block-diagonal frame.
    pub fn frame(&self, mu: &LagrangianFrame, lam: &LagrangianFrame) -> Result<LagrangianFrame> {
        let n = self.base.n();
        if mu.n() != n || lam.n() != n {
            return Err(Error::invalid("frames do not belong to the base space", "box"));
        }
        Ok(LagrangianFrame::from_orthonormal(&self.space, linalg::block_diag(mu.matrix(), lam.matrix())))
    }

    /// Frame of the graph `{(v, Phi v)}` of a linear map on the base space.
    pub fn graph(&self, phi: &RMat) -> Result<LagrangianFrame> {
        let m = self.base.dim();
        let id = RMat::identity(m, m);
        LagrangianFrame::new(&self.space, linalg::vstack(&[&id, phi]))
    }
}

/// Pairs two paths on the union of their sample times.
pub fn pair_path(
    boxed: &BoxSpace,
    mu: &LagrangianPath,
    lam: &LagrangianPath,
) -> Result<LagrangianPath> {
    let mut times = mu.times();
    times.extend(lam.times());
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();
    let samples = times
        .iter()
        .map(|&t| Ok((t, boxed.frame(&mu.at(t)?, &lam.at(t)?)?)))
        .collect::<Result<Vec<_>>>()?;
    match (mu.refiner(), lam.refiner()) {
        (Some(a), Some(b)) => {
            let (a, b, bx) = (a.clone(), b.clone(), boxed.clone());
            let r: Refiner<LagrangianFrame> = Arc::new(move |t| bx.frame(&a(t)?, &b(t)?));
            Path::with_refiner(samples, r)
        }
        _ => Path::new(samples),
    }
}

/// Maslov index of a path of pairs: `Mas({mu_t ⊞ lambda_t}, Delta)`.
pub fn pair_maslov(boxed: &BoxSpace, mu: &LagrangianPath, lam: &LagrangianPath) -> Result<IndexReport> {
    maslov::maslov(&pair_path(boxed, mu, lam)?, boxed.diagonal())
}

/// `a ⊕ b` in the direct sum space.
pub fn direct_sum_frame(sum: &Arc<SymplecticSpace>, a: &LagrangianFrame, b: &LagrangianFrame) -> Result<LagrangianFrame> {
    if a.n() + b.n() != sum.n() {
        return Err(Error::invalid("dimensions do not add up", "direct_sum"));
    }
    LagrangianFrame::new(sum, linalg::block_diag(a.matrix(), b.matrix()))
}

/// `theta -> theta ⊕ ell1^perp` applied along a path, in `H_0 ⊕ H_1`.
pub fn embed_path(
    sum: &Arc<SymplecticSpace>,
    path: &LagrangianPath,
    ell1: &LagrangianFrame,
) -> Result<LagrangianPath> {
    let perp = ell1.perp();
    let sum = sum.clone();
    path.map(move |theta| direct_sum_frame(&sum, theta, &perp))
}

/// Two polarized spaces `B = lambda_+ ⊕ lambda_-`, `H = ell_+ ⊕ ell_-` with
/// `i_+ : ell_+ -> lambda_+` diagonal in the frame bases and `i_- : lambda_- -> ell_-`
/// determined by `omega_B(i_+ x, b) = omega_H(x, i_- b)`.
#[derive(Debug, Clone)]
pub struct PolarizedPair {
    lambda_plus: LagrangianFrame,
    lambda_minus: LagrangianFrame,
    ell_plus: LagrangianFrame,
    ell_minus: LagrangianFrame,
    i_plus: DVector<f64>,
    i_minus: RMat,
    gamma: RMat,
}

/// Serialized form of a standard polarized pair.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct PolarizedPairSpec {
    pub n_B: usize,
    pub n_H: usize,
    pub i_plus_diag: Vec<f64>,
}

impl PolarizedPair {
    pub fn new(
        lambda_plus: LagrangianFrame,
        lambda_minus: LagrangianFrame,
        ell_plus: LagrangianFrame,
        ell_minus: LagrangianFrame,
        i_plus_diag: &[f64],
    ) -> Result<Self> {
        lambda_plus.ensure_same_space(&lambda_minus, "lambda_minus")?;
        ell_plus.ensure_same_space(&ell_minus, "ell_minus")?;
        let n = lambda_plus.n();
        if ell_plus.n() != n {
            return Err(Error::invalid("reduction needs equal dimensions n_B = n_H", "small"));
        }
        if i_plus_diag.len() != n || i_plus_diag.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::invalid("i_plus must be n positive finite numbers", "i_plus_diag"));
        }
        let tol = Tolerances::default();
        if intersection_dim(&lambda_plus, &lambda_minus, tol.rank)? > 0 {
            return Err(Error::invalid("lambda_+ and lambda_- do not polarize B", "lambda_minus"));
        }
        if intersection_dim(&ell_plus, &ell_minus, tol.rank)? > 0 {
            return Err(Error::invalid("ell_+ and ell_- do not polarize H", "ell_minus"));
        }
        let big = lambda_plus.space();
        let small = ell_plus.space();
        let w_b = big.omega(lambda_plus.matrix(), lambda_minus.matrix());
        let w_h = small.omega(ell_plus.matrix(), ell_minus.matrix());
        let d = RMat::from_diagonal(&DVector::from_column_slice(i_plus_diag));
        let w_h_inv = w_h.try_inverse().ok_or_else(|| Error::numerical("ell_+ / ell_- pairing is singular"))?;
        let i_minus = w_h_inv * &d * w_b;
        let d_inv = RMat::from_diagonal(&DVector::from_iterator(n, i_plus_diag.iter().map(|s| 1.0 / s)));
        let basis_b = linalg::hstack(&[lambda_plus.matrix(), lambda_minus.matrix()]);
        let image = linalg::hstack(&[&(ell_plus.matrix() * d_inv), &(ell_minus.matrix() * &i_minus)]);
        let gamma = image
            * basis_b.try_inverse().ok_or_else(|| Error::numerical("polarization basis is singular"))?;
        Ok(PolarizedPair {
            lambda_plus,
            lambda_minus,
            ell_plus,
            ell_minus,
            i_plus: DVector::from_column_slice(i_plus_diag),
            i_minus,
            gamma,
        })
    }

    /// Both spaces standard of half-dimension `n`, `lambda_+ = ell_+` horizontal,
    /// `lambda_- = ell_-` vertical.
    pub fn standard(n: usize, i_plus_diag: &[f64]) -> Result<Self> {
        let big = Arc::new(SymplecticSpace::standard(n)?);
        let small = Arc::new(SymplecticSpace::standard(n)?);
        Self::new(big.horizontal(), big.vertical(), small.horizontal(), small.vertical(), i_plus_diag)
    }

    pub fn from_spec(spec: &PolarizedPairSpec) -> Result<Self> {
        if spec.n_B != spec.n_H {
            return Err(Error::invalid("reduction needs equal dimensions n_B = n_H", "n_H"));
        }
        Self::standard(spec.n_B, &spec.i_plus_diag)
    }

    pub fn lambda_plus(&self) -> &LagrangianFrame {
        &self.lambda_plus
    }

    pub fn lambda_minus(&self) -> &LagrangianFrame {
        &self.lambda_minus
    }

    pub fn ell_plus(&self) -> &LagrangianFrame {
        &self.ell_plus
    }

    pub fn ell_minus(&self) -> &LagrangianFrame {
        &self.ell_minus
    }

    pub fn i_plus(&self) -> &DVector<f64> {
        &self.i_plus
    }

    /// `i_-` in the frame bases of `lambda_-` and `ell_-`.
    pub fn i_minus(&self) -> &RMat {
        &self.i_minus
    }

    /// The linear map of `B` onto `H` inducing `gamma`.
    pub fn gamma_map(&self) -> &RMat {
        &self.gamma
    }

    /// Largest violation of `omega_B(i_+ x, b) = omega_H(x, i_- b)` over basis vectors.
    pub fn compatibility_residual(&self) -> f64 {
        let big = self.lambda_plus.space();
        let small = self.ell_plus.space();
        let d = RMat::from_diagonal(&self.i_plus);
        let lhs = big.omega(&(self.lambda_plus.matrix() * d), self.lambda_minus.matrix());
        let rhs = small.omega(self.ell_plus.matrix(), &(self.ell_minus.matrix() * &self.i_minus));
        linalg::max_abs(&(lhs - rhs))
    }

    /// `gamma(mu) = {(x, i_- b) : (i_+ x, b) ∈ mu}`.
    pub fn gamma_reduce(&self, mu: &LagrangianFrame) -> Result<LagrangianFrame> {
        mu.ensure_same_space(&self.lambda_plus, "mu")?;
        LagrangianFrame::new(self.ell_plus.space(), &self.gamma * mu.matrix())
    }

    pub fn reduce_path(&self, path: &LagrangianPath) -> Result<LagrangianPath> {
        let me = self.clone();
        path.map(move |mu| me.gamma_reduce(mu))
    }

    /// `tol` for decisions on reduced paths. `gamma` can bring a Lagrangian
    /// closer to the Maslov cycle of `ell_-` by the condition number of the
    /// map, so the eigenvalue-at-`-1` threshold is divided by it.
    pub fn reduced_tolerances(&self, tol: &Tolerances) -> Tolerances {
        let sv = self.gamma.clone().singular_values();
        let cond = sv.max() / sv.min();
        Tolerances { minus_one: tol.minus_one / cond.max(1.0), ..*tol }
    }

    /// Maslov index of the reduced path against `ell_-`, with `reduced_tolerances`.
    pub fn reduced_maslov(&self, path: &LagrangianPath, tol: &Tolerances) -> Result<IndexReport> {
        maslov::maslov_with(&self.reduce_path(path)?, &self.ell_minus, &self.reduced_tolerances(tol))
    }
}

/// Basis of `X° ∩ W`: vectors of `span W` that are omega-orthogonal to `span X`.
pub fn annihilator_within(space: &SymplecticSpace, x: &RMat, within: &RMat) -> RMat {
    let m = x.transpose() * space.omega_gram() * within;
    let scale = linalg::max_abs(&m).max(1.0);
    within * linalg::null_space(&m, 1e-9 * scale)
}

/// For a split `lambda_- = S + T` returns `F = T° ∩ lambda_+` and `G = S° ∩ lambda_+`.
pub fn split_polarization(
    lambda_plus: &LagrangianFrame,
    s: &RMat,
    t: &RMat,
) -> (RMat, RMat) {
    let sp = lambda_plus.space();
    let f = annihilator_within(sp, t, lambda_plus.matrix());
    let g = annihilator_within(sp, s, lambda_plus.matrix());
    (f, g)
}
