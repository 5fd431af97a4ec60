//! Kashiwara, complex Kashiwara, Leray and Hormander indices and the
//! transition functions of the Maslov covering.
//!
//! Normalization: with `mu` the Leray index and `sigma` the Kashiwara index,
//! `mu(l1, l2) + mu(l2, l3) + mu(l3, l1) = -sigma(l1, l2, l3) / 2` and
//! `Mas(c, lambda) = -mu(c(0)~, c(1)~) + sigma(lambda, c(1), c(0)) / 2`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, SignatureResult};
use crate::maslov::{self, souriau_path};
use crate::path::LagrangianPath;
use crate::random;
use crate::souriau::{self, UnitaryMatrix};
use crate::space::{intersection_dim, LagrangianFrame};
use crate::tol::Tolerances;

/// Relative threshold below which Gram eigenvalues count as null.
const NULL_TOL: f64 = 1e-8;
/// Probes closer than this (in eigenphase) to the cut are not used.
const PROBE_MARGIN: f64 = 1e-3;
const PROBE_DRAWS: usize = 20;
const SYNTH_INTERVALS: usize = 16;

/// Signature of `omega(x, x') + omega(x', x'') + omega(x'', x)` on
/// `l1 ⊕ l2 ⊕ l3`.
pub fn kashiwara(l1: &LagrangianFrame, l2: &LagrangianFrame, l3: &LagrangianFrame) -> Result<SignatureResult> {
    l1.ensure_same_space(l2, "l2")?;
    l1.ensure_same_space(l3, "l3")?;
    let om = l1.space().omega_gram();
    let floor = [l1, l2, l3].iter().fold(0.0f64, |a, l| a.max(linalg::norm2(l.matrix()).powi(2))) * linalg::norm2(&om);
    let (vals, _) = linalg::sym_eigen(&kashiwara_gram(l1, l2, l3));
    Ok(SignatureResult::from_eigenvalues_with_floor(&vals, NULL_TOL, floor))
}

/// Symmetric Gram matrix of the Kashiwara quadratic form.
pub fn kashiwara_gram(l1: &LagrangianFrame, l2: &LagrangianFrame, l3: &LagrangianFrame) -> RMat {
    let om = l1.space().omega_gram();
    let (f1, f2, f3) = (l1.matrix(), l2.matrix(), l3.matrix());
    let m12 = f1.transpose() * &om * f2;
    let m23 = f2.transpose() * &om * f3;
    let m31 = f3.transpose() * &om * f1;
    let n = l1.n();
    let mut g = RMat::zeros(3 * n, 3 * n);
    let mut put = |a: usize, b: usize, m: &RMat| {
        g.view_mut((a * n, b * n), (n, n)).copy_from(m);
        g.view_mut((b * n, a * n), (n, n)).copy_from(&m.transpose());
    };
    put(0, 1, &m12);
    put(1, 2, &m23);
    put(2, 0, &m31);
    g * 0.5
}

/// Complex basis of `Phi_lambda(U)`: `(u - iJu) - (w + iJw)` with `w = V u`,
/// `u` running over the columns of the frame of `lambda` and `V` the real
/// operator of `U`.
pub fn phi_basis(lambda: &LagrangianFrame, u: &UnitaryMatrix) -> Result<CMat> {
    let sp = lambda.space();
    if u.size() != sp.n() {
        return Err(Error::invalid("unitary size does not match the space", "U"));
    }
    let v = souriau::unitary_to_real(sp, u);
    let f = lambda.matrix();
    let w = v * f;
    let j = sp.j();
    let re = f - &w;
    let im = -(j * f) - j * &w;
    Ok(CMat::from_fn(re.nrows(), re.ncols(), |i, k| Complex64::new(re[(i, k)], im[(i, k)])))
}

/// Hermitian Gram matrix of the complex Kashiwara form on three subspaces of
/// the complexification, given by column bases. Uses
/// `omega^C(z, w) = z^T Omega conj(w)`.
pub fn complex_kashiwara_gram(om: &RMat, z: [&CMat; 3]) -> CMat {
    let omc = linalg::to_complex(om);
    let dims: Vec<usize> = z.iter().map(|b| b.ncols()).collect();
    let offs = [0, dims[0], dims[0] + dims[1]];
    let total: usize = dims.iter().sum();
    let mut g = CMat::zeros(total, total);
    for (a, b) in [(0usize, 1usize), (1, 2), (2, 0)] {
        let m = z[a].transpose() * &omc * z[b].map(|c| c.conj());
        g.view_mut((offs[a], offs[b]), (dims[a], dims[b])).copy_from(&m);
        g.view_mut((offs[b], offs[a]), (dims[b], dims[a])).copy_from(&m.adjoint());
    }
    g
}

/// Null eigenvalues are judged against `||Omega|| max ||z_i||^2` as well as the
/// Gram norm.
pub fn complex_kashiwara_subspaces(om: &RMat, z: [&CMat; 3]) -> SignatureResult {
    let floor = z.iter().fold(0.0f64, |a, b| a.max(linalg::norm2_c(b).powi(2))) * linalg::norm2(om);
    let (vals, _) = linalg::herm_eigen(&complex_kashiwara_gram(om, z));
    SignatureResult::from_eigenvalues_with_floor(&vals, NULL_TOL, floor)
}

/// Complex Kashiwara index of `Phi_lambda(U_1), Phi_lambda(U_2), Phi_lambda(U_3)`.
pub fn complex_kashiwara(
    u1: &UnitaryMatrix,
    u2: &UnitaryMatrix,
    u3: &UnitaryMatrix,
    lambda: &LagrangianFrame,
) -> Result<SignatureResult> {
    let z1 = phi_basis(lambda, u1)?;
    let z2 = phi_basis(lambda, u2)?;
    let z3 = phi_basis(lambda, u3)?;
    Ok(complex_kashiwara_subspaces(&lambda.space().omega_gram(), [&z1, &z2, &z3]))
}

/// A unitary with a chosen argument of its determinant.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedUnitary {
    u: UnitaryMatrix,
    alpha: f64,
}

impl LiftedUnitary {
    pub fn new(u: UnitaryMatrix, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::invalid("alpha must be finite", "alpha"));
        }
        let d = u.det();
        let gap = (d - Complex64::from_polar(1.0, alpha)).norm();
        if gap > 1e-9 {
            return Err(Error::invalid(format!("det U differs from e^(i alpha) by {gap:.3e}"), "alpha"));
        }
        Ok(LiftedUnitary { u, alpha })
    }

    /// Lift with the principal argument of `det U`.
    pub fn principal(u: UnitaryMatrix) -> Self {
        let alpha = u.det().arg();
        LiftedUnitary { u, alpha }
    }

    pub fn unitary(&self) -> &UnitaryMatrix {
        &self.u
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// The same unitary with `alpha` shifted by `2 pi k`.
    pub fn shifted(&self, k: i64) -> Self {
        LiftedUnitary { u: self.u.clone(), alpha: self.alpha + TAU * k as f64 }
    }
}

/// Eigenphases of `-U_1 U_2^H` in `(-pi, pi]`.
fn quotient_args(l1: &LiftedUnitary, l2: &LiftedUnitary) -> Result<Vec<f64>> {
    if l1.u.size() != l2.u.size() {
        return Err(Error::invalid("unitaries differ in size", "l2"));
    }
    let m = -(l1.u.matrix() * l2.u.matrix().adjoint());
    let (vals, _) = linalg::normal_eigen(&m)?;
    Ok(vals.iter().map(|z| z.arg()).collect())
}

/// Smallest angular distance of the spectrum of `-U_1 U_2^H` to `-1`.
pub fn cut_distance(l1: &LiftedUnitary, l2: &LiftedUnitary) -> Result<f64> {
    Ok(quotient_args(l1, l2)?.iter().map(|a| PI - a.abs()).fold(f64::INFINITY, f64::min))
}

/// Leray index `(alpha_1 - alpha_2 + i Tr Log(-U_1 U_2^H)) / 2pi` of a
/// transversal lifted pair.
pub fn leray(l1: &LiftedUnitary, l2: &LiftedUnitary) -> Result<f64> {
    leray_with(l1, l2, &Tolerances::default())
}

pub fn leray_with(l1: &LiftedUnitary, l2: &LiftedUnitary, tol: &Tolerances) -> Result<f64> {
    let args = quotient_args(l1, l2)?;
    if args.iter().any(|a| PI - a.abs() <= tol.leray_transversal) {
        return Err(Error::precondition(
            "pair is not transversal: -U1 U2^H has an eigenvalue on the branch cut",
            "leray",
        ));
    }
    let trace: f64 = args.iter().sum();
    Ok((l1.alpha - l2.alpha - trace) / TAU)
}

/// Leray index of an arbitrary lifted pair through a probe transversal to both:
/// `mu(l, l2) - mu(l, l1) - sigma^C(Phi(U_1), Phi(U_2), Phi(U)) / 2`.
/// Without a probe, up to 20 Haar-random probes drawn from `seed` are tried.
/// Returns the value and the probe used.
pub fn leray_general(
    l1: &LiftedUnitary,
    l2: &LiftedUnitary,
    probe: Option<&LiftedUnitary>,
    lambda: &LagrangianFrame,
    seed: u64,
) -> Result<(f64, LiftedUnitary)> {
    let n = l1.u.size();
    let admissible = |p: &LiftedUnitary| -> Result<bool> {
        Ok(cut_distance(l1, p)? > PROBE_MARGIN && cut_distance(l2, p)? > PROBE_MARGIN)
    };
    let probe = match probe {
        Some(p) => {
            if !admissible(p)? {
                return Err(Error::precondition("probe is not transversal to both arguments", "probe"));
            }
            p.clone()
        }
        None => {
            let mut rng = random::rng(seed);
            let mut chosen = None;
            for _ in 0..PROBE_DRAWS {
                let u = UnitaryMatrix::new_unchecked(random::unitary(n, &mut rng));
                let p = LiftedUnitary::principal(u);
                if admissible(&p)? {
                    chosen = Some(p);
                    break;
                }
            }
            chosen.ok_or_else(|| Error::precondition("no admissible probe found in 20 draws", "probe"))?
        }
    };
    let sigma = complex_kashiwara(&l1.u, &l2.u, &probe.u, lambda)?;
    let value = leray(&probe, l2)? - leray(&probe, l1)? - 0.5 * sigma.signature() as f64;
    Ok((value, probe))
}

/// Lifts of `S_lambda(c(0))` and `S_lambda(c(1))` related by continuation of
/// `arg det` along the path; the start uses the principal argument.
pub fn lift_along(path: &LagrangianPath, lambda: &LagrangianFrame) -> Result<(LiftedUnitary, LiftedUnitary)> {
    let tol = Tolerances::default();
    let upath = souriau_path(path, lambda, &tol)?.refined(tol.unitary_step)?;
    let samples = upath.samples();
    let start = LiftedUnitary::principal(samples[0].1.clone());
    let mut alpha = start.alpha;
    for w in samples.windows(2) {
        let step = w[0].1.matrix().adjoint() * w[1].1.matrix();
        let (vals, _) = linalg::normal_eigen(&step)?;
        alpha += vals.iter().map(|z| z.arg()).sum::<f64>();
    }
    let end_u = samples[samples.len() - 1].1.clone();
    let end = LiftedUnitary { u: end_u, alpha };
    Ok((start, end))
}

/// A path from `l0` to `l1`: the geodesic `Z(t) = Z_0 exp(t Log(Z_0^H Z_1))` of
/// unitary frames, mapped to Lagrangians by `Z -> span[Re Z; Im Z]`.
pub fn connecting_path(l0: &LagrangianFrame, l1: &LagrangianFrame) -> Result<LagrangianPath> {
    l0.ensure_same_space(l1, "l1")?;
    let z0 = l0.std_unitary();
    let z1 = l1.std_unitary();
    let (vals, q) = linalg::normal_eigen(&(z0.adjoint() * &z1))?;
    let args: Vec<f64> = vals.iter().map(|z| z.arg()).collect();
    let space = l0.space().clone();
    let (start, end) = (l0.clone(), l1.clone());
    LagrangianPath::from_fn(
        move |t| {
            if t == 0.0 {
                return Ok(start.clone());
            }
            if t == 1.0 {
                return Ok(end.clone());
            }
            let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                args.len(),
                args.iter().map(|a| Complex64::from_polar(1.0, t * a)),
            ));
            let z = &z0 * &q * d * q.adjoint();
            LagrangianFrame::from_unitary(&space, &z)
        },
        SYNTH_INTERVALS,
    )
}

/// Hormander index `Mas(c, lambda) - Mas(c, mu)` for a path `c` from `ell0` to
/// `ell1`; a connecting path is synthesized when none is given.
pub fn hormander(
    ell0: &LagrangianFrame,
    ell1: &LagrangianFrame,
    lambda: &LagrangianFrame,
    mu: &LagrangianFrame,
    path: Option<&LagrangianPath>,
) -> Result<i64> {
    hormander_with(ell0, ell1, lambda, mu, path, &Tolerances::default())
}

pub fn hormander_with(
    ell0: &LagrangianFrame,
    ell1: &LagrangianFrame,
    lambda: &LagrangianFrame,
    mu: &LagrangianFrame,
    path: Option<&LagrangianPath>,
    tol: &Tolerances,
) -> Result<i64> {
    ell0.ensure_same_space(ell1, "ell1")?;
    ell0.ensure_same_space(lambda, "lambda")?;
    ell0.ensure_same_space(mu, "mu")?;
    let synthesized;
    let c = match path {
        Some(p) => {
            if p.start().distance(ell0) > 1e-8 || p.end().distance(ell1) > 1e-8 {
                return Err(Error::invalid("path does not connect ell0 to ell1", "path"));
            }
            p
        }
        None => {
            synthesized = connecting_path(ell0, ell1)?;
            &synthesized
        }
    };
    Ok(maslov::maslov_with(c, lambda, tol)?.value - maslov::maslov_with(c, mu, tol)?.value)
}

/// Transition function `g_{lambda,mu}(nu) = sigma(ell_ref^perp, nu; lambda, mu)`
/// on `O_lambda ∩ O_mu`.
pub fn transition_function(
    nu: &LagrangianFrame,
    lambda: &LagrangianFrame,
    mu: &LagrangianFrame,
    ell_ref: &LagrangianFrame,
) -> Result<i64> {
    let tol = Tolerances::default();
    if intersection_dim(nu, lambda, tol.rank)? > 0 || intersection_dim(nu, mu, tol.rank)? > 0 {
        return Err(Error::precondition("nu must be transversal to lambda and mu", "nu"));
    }
    hormander(&ell_ref.perp(), nu, lambda, mu, None)
}
