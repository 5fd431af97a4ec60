//! Crossings of a Lagrangian path with the Maslov cycle of `lambda`, the two
//! crossing forms, and the Maslov index as a sum of their signatures.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat, SignatureResult};
use crate::maslov::match_phases;
use crate::path::{LagrangianPath, Path};
use crate::souriau::{self, UnitaryMatrix};
use crate::space::LagrangianFrame;
use crate::tol::Tolerances;

/// Crossings closer than this in `t` are merged into one.
const MERGE_WIDTH: f64 = 1e-8;
/// Unitary step used while scanning for crossings.
const SCAN_STEP: f64 = 0.25;
/// Eigenphase distance to `-1` used to size the kernel at a located crossing.
const KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    pub t_star: f64,
    /// Orthonormal basis of `mu(t*) ∩ lambda`, as columns in the space.
    #[serde(skip)]
    pub kernel_basis: RMat,
    /// The form on the kernel in the coordinates of `kernel_basis`.
    #[serde(skip)]
    pub form: RMat,
    pub signature: SignatureResult,
    pub regular: bool,
}

impl Crossing {
    pub fn dim(&self) -> usize {
        self.kernel_basis.ncols()
    }
}

/// A copy of the path whose refiner interpolates in local charts between
/// samples when the path has none: on `[t_k, t_{k+1}]`, `mu(t)` is the graph
/// of `s A` over `mu(t_k)` where `mu(t_{k+1})` is the graph of `A`.
pub fn interpolated(path: &LagrangianPath) -> Result<LagrangianPath> {
    if path.has_refiner() {
        return Ok(path.clone());
    }
    let samples: Vec<(f64, LagrangianFrame)> = path.samples().to_vec();
    let charts = samples
        .windows(2)
        .map(|w| chart_generator(&w[0].1, &w[1].1))
        .collect::<Result<Vec<_>>>()?;
    let times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let frames: Vec<LagrangianFrame> = samples.iter().map(|s| s.1.clone()).collect();
    let refiner = Arc::new(move |t: f64| {
        let k = match times.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(k) => return Ok(frames[k].clone()),
            Err(k) => k.clamp(1, times.len() - 1) - 1,
        };
        let s = (t - times[k]) / (times[k + 1] - times[k]);
        let base = &frames[k];
        let j = base.space().j();
        let f = base.matrix() + j * base.matrix() * (&charts[k] * s);
        LagrangianFrame::new(base.space(), f)
    });
    Path::with_refiner(samples, refiner)
}

/// Symmetric `A` with `target = graph of A over base`.
pub fn chart_generator(base: &LagrangianFrame, target: &LagrangianFrame) -> Result<RMat> {
    let sp = base.space();
    let g = sp.metric();
    let f = base.matrix();
    let jf = sp.j() * f;
    let x = f.transpose() * g * target.matrix();
    let y = jf.transpose() * g * target.matrix();
    let xi = x
        .try_inverse()
        .ok_or_else(|| Error::precondition("target is not a graph over the base frame", "chart"))?;
    Ok(linalg::symmetrize(&(y * xi)))
}

fn offsets(u: &UnitaryMatrix) -> Result<Vec<f64>> {
    Ok(u.eigenphases()?.into_iter().map(|p| p - PI).collect())
}

fn sign_of(theta: f64, snap: f64) -> i32 {
    if theta.abs() <= snap {
        0
    } else if theta > 0.0 {
        1
    } else {
        -1
    }
}

/// Locations `t*` where `mu(t*)` meets `lambda`. Each sign change of an
/// eigenphase offset from `pi` is bisected down to the bisection tolerance.
/// An eigenphase resting on `-1` over an interval wider than `tol` is reported
/// as a non-isolated crossing.
pub fn find_crossings(path: &LagrangianPath, lambda: &LagrangianFrame, tol: f64) -> Result<Vec<f64>> {
    find_crossings_with(path, lambda, tol, &Tolerances::default())
}

pub fn find_crossings_with(
    path: &LagrangianPath,
    lambda: &LagrangianFrame,
    tol: f64,
    tols: &Tolerances,
) -> Result<Vec<f64>> {
    let path = interpolated(path)?;
    let lam = lambda.clone();
    let upath = crate::maslov::souriau_path(&path, lambda, tols)?.refined(SCAN_STEP)?;
    let refiner = path.refiner().expect("interpolated path has a refiner").clone();
    let eval = move |t: f64| -> Result<Vec<f64>> { offsets(&souriau::souriau(&lam, &refiner(t)?)?) };
    let snap = tols.minus_one;
    let rows = upath
        .samples()
        .par_iter()
        .map(|(t, u)| offsets(u).map(|o| (*t, o)))
        .collect::<Result<Vec<_>>>()?;
    let n = rows[0].1.len();

    let mut found: Vec<f64> = Vec::new();
    for (k, (t, row)) in rows.iter().enumerate() {
        if row.iter().any(|&th| sign_of(th, snap) == 0) {
            found.push(*t);
            if k + 1 < rows.len() {
                let (t1, next) = &rows[k + 1];
                let shift = phase_shift(row, next);
                for i in 0..n {
                    let j = (i + shift) % n;
                    if sign_of(row[i], snap) == 0 && sign_of(next[j], snap) == 0 && t1 - t > tol {
                        return Err(Error::ambiguous(
                            "eigenvalue rests on -1 over an interval: non-isolated crossing",
                            format!("t in [{t}, {t1}]"),
                        ));
                    }
                }
            }
        }
    }
    for w in rows.windows(2) {
        let ((ta, ra), (tb, rb)) = (&w[0], &w[1]);
        let shift = phase_shift(ra, rb);
        for i in 0..n {
            let (x, y) = (ra[i], rb[(i + shift) % n]);
            if (y - x).abs() > PI {
                continue; // trajectory passes through phase 0, not -1
            }
            let (sa, sb) = (sign_of(x, snap), sign_of(y, snap));
            if sa * sb < 0 {
                found.push(bisect(&eval, *ta, x, *tb, y, tols.bisection)?);
            }
        }
    }
    found.sort_by(|a, b| a.total_cmp(b));
    let mut merged: Vec<f64> = Vec::new();
    for t in found {
        if merged.last().is_none_or(|&m| t - m > MERGE_WIDTH) {
            merged.push(t);
        }
    }
    Ok(merged)
}

fn phase_shift(a: &[f64], b: &[f64]) -> usize {
    let pa: Vec<f64> = a.iter().map(|x| x + PI).collect();
    let pb: Vec<f64> = b.iter().map(|x| x + PI).collect();
    match_phases(&pa, &pb)
}

/// Bisection on one eigenphase trajectory, followed by continuity from the
/// endpoint values.
fn bisect(
    eval: &dyn Fn(f64) -> Result<Vec<f64>>,
    mut ta: f64,
    mut xa: f64,
    mut tb: f64,
    mut xb: f64,
    resolution: f64,
) -> Result<f64> {
    while tb - ta > resolution {
        let tm = 0.5 * (ta + tb);
        if tm <= ta || tm >= tb {
            break;
        }
        let row = eval(tm)?;
        let guess = xa + (xb - xa) * 0.5;
        let xm = row
            .iter()
            .copied()
            .min_by(|p, q| (p - guess).abs().total_cmp(&(q - guess).abs()))
            .unwrap_or(guess);
        if xm == 0.0 {
            return Ok(tm);
        }
        if (xm < 0.0) == (xa < 0.0) {
            ta = tm;
            xa = xm;
        } else {
            tb = tm;
            xb = xm;
        }
    }
    Ok(0.5 * (ta + tb))
}

struct Stencil {
    t_minus: Option<f64>,
    t_plus: Option<f64>,
}

fn stencil(t_star: f64, h: f64) -> Stencil {
    Stencil {
        t_minus: if t_star - h >= 0.0 { Some(t_star - h) } else { None },
        t_plus: if t_star + h <= 1.0 { Some(t_star + h) } else { None },
    }
}

/// Finite-difference derivative at `t*` of a matrix function vanishing there.
fn derivative<M>(value: &dyn Fn(f64) -> Result<M>, zero: &M, t_star: f64, h: f64) -> Result<(M, M)>
where
    M: Clone + std::ops::Sub<Output = M> + std::ops::Mul<f64, Output = M>,
{
    let st = stencil(t_star, h);
    let (lo, hi, width) = match (st.t_minus, st.t_plus) {
        (Some(a), Some(b)) => (value(a)?, value(b)?, 2.0 * h),
        (None, Some(b)) => (zero.clone(), value(b)?, h),
        (Some(a), None) => (value(a)?, zero.clone(), h),
        (None, None) => return Err(Error::invalid("finite-difference step exceeds the path", "h")),
    };
    let diff = hi - lo;
    Ok((diff.clone() * (1.0 / width), diff))
}

/// Crossing form `Q(x, y) = d/dt omega(x, J A_t y)` at `t*`, where `mu(t)` is
/// the graph of `A_t` over `mu(t*)`, restricted to `mu(t*) ∩ lambda`.
pub fn crossing_form(path: &LagrangianPath, lambda: &LagrangianFrame, t_star: f64, h: f64) -> Result<Crossing> {
    crossing_form_with(path, lambda, t_star, h, false, &Tolerances::default())
}

pub fn crossing_form_with(
    path: &LagrangianPath,
    lambda: &LagrangianFrame,
    t_star: f64,
    h: f64,
    richardson: bool,
    tols: &Tolerances,
) -> Result<Crossing> {
    if !(0.0..=1.0).contains(&t_star) || !(h > 0.0 && h < 0.5) {
        return Err(Error::invalid("need t* in [0, 1] and h in (0, 0.5)", "crossing_form"));
    }
    let path = interpolated(path)?;
    let mu = path.at(t_star)?;
    lambda.ensure_same_space(&mu, "path")?;
    let k = kernel_dim_at(lambda, &mu)?;
    if k == 0 {
        return Err(Error::invalid("mu(t*) is transversal to lambda: not a crossing", format!("t={t_star}")));
    }
    let n = mu.n();
    let resid = (RMat::identity(2 * n, 2 * n) - lambda.projection()) * mu.matrix();
    let coords = linalg::null_basis(&resid, k);
    let kernel_basis = mu.matrix() * &coords;

    let chart = |t: f64| -> Result<RMat> { chart_generator(&mu, &path.at(t)?) };
    let zero = RMat::zeros(n, n);
    let (mut d, diff) = derivative(&chart, &zero, t_star, h)?;
    if linalg::max_abs(&diff) < 1e-13 {
        return Err(Error::ambiguous("degenerate differentiation: chart does not move", format!("t={t_star}")));
    }
    if richardson {
        let (d2, _) = derivative(&chart, &zero, t_star, 0.5 * h)?;
        let two_sided = stencil(t_star, h).t_minus.is_some() && stencil(t_star, h).t_plus.is_some();
        d = if two_sided { (d2 * 4.0 - d) * (1.0 / 3.0) } else { d2 * 2.0 - d };
    }
    let d = linalg::symmetrize(&d);
    let form = linalg::symmetrize(&(coords.transpose() * &d * &coords));
    let scale = linalg::norm2(&d);
    let (vals, _) = linalg::sym_eigen(&form);
    let regular = scale > 0.0 && vals.iter().all(|v| v.abs() > tols.regularity * scale);
    let signature = signature_abs(&vals, tols.regularity * scale);
    Ok(Crossing { t_star, kernel_basis, form, signature, regular })
}

fn signature_abs(vals: &[f64], cut: f64) -> SignatureResult {
    let positives = vals.iter().filter(|&&v| v > cut).count();
    let negatives = vals.iter().filter(|&&v| v < -cut).count();
    SignatureResult { positives, negatives, nulls: vals.len() - positives - negatives }
}

fn kernel_dim_at(lambda: &LagrangianFrame, mu: &LagrangianFrame) -> Result<usize> {
    souriau::kernel_dim_minus_one(&souriau::souriau(lambda, mu)?, KERNEL_TOL)
}

/// The second crossing form: `d/dt R_t` at `t*` restricted to `ker(W(t*) + I)`,
/// with `R_t = -i Log(W(t*)^{-1} W(t))` and `W = S_lambda(mu)`.
/// Returns the Hermitian form on an orthonormal kernel basis.
pub fn crossing_form_tilde(
    path: &LagrangianPath,
    lambda: &LagrangianFrame,
    t_star: f64,
    h: f64,
) -> Result<(CMat, SignatureResult)> {
    let tols = Tolerances::default();
    let path = interpolated(path)?;
    let mu = path.at(t_star)?;
    let w_star = souriau::souriau(lambda, &mu)?;
    let k = souriau::kernel_dim_minus_one(&w_star, KERNEL_TOL)?;
    if k == 0 {
        return Err(Error::invalid("W(t*) has no eigenvalue -1: not a crossing", format!("t={t_star}")));
    }
    let m = w_star.size();
    let w_inv = w_star.matrix().adjoint();
    let minus_i = Complex64::new(0.0, -1.0);
    let log_at = |t: f64| -> Result<CMat> {
        let w = souriau::souriau(lambda, &path.at(t)?)?;
        Ok(linalg::unitary_log(&(&w_inv * w.matrix()), tols.log_cut)? * minus_i)
    };
    let zero = CMat::zeros(m, m);
    let st = stencil(t_star, h);
    let (lo, hi, width) = match (st.t_minus, st.t_plus) {
        (Some(a), Some(b)) => (log_at(a)?, log_at(b)?, 2.0 * h),
        (None, Some(b)) => (zero, log_at(b)?, h),
        (Some(a), None) => (log_at(a)?, zero, h),
        (None, None) => return Err(Error::invalid("finite-difference step exceeds the path", "h")),
    };
    let rdot = linalg::hermitize(&((hi - lo) * Complex64::new(1.0 / width, 0.0)));
    let plus_id = w_star.matrix() + CMat::identity(m, m);
    let kern = linalg::null_basis_c(&plus_id, k);
    let form = linalg::hermitize(&(kern.adjoint() * &rdot * &kern));
    let (vals, _) = linalg::herm_eigen(&form);
    let scale = linalg::norm2_c(&rdot);
    Ok((form, signature_abs(&vals, tols.regularity * scale)))
}

/// Maslov index as `sum sign Q` over interior crossings, `-q` at `t* = 0` and
/// `+p` at `t* = 1`. Fails on a non-regular crossing.
pub fn maslov_via_crossings(path: &LagrangianPath, lambda: &LagrangianFrame) -> Result<i64> {
    let tols = Tolerances::default();
    let crossings = all_crossings(path, lambda, &tols)?;
    let mut total = 0;
    for c in &crossings {
        if !c.regular {
            return Err(Error::ambiguous("non-regular crossing", format!("t={}", c.t_star)));
        }
        total += endpoint_contribution(c);
    }
    Ok(total)
}

pub fn endpoint_contribution(c: &Crossing) -> i64 {
    let (p, q) = (c.signature.positives as i64, c.signature.negatives as i64);
    if c.t_star <= MERGE_WIDTH {
        -q
    } else if c.t_star >= 1.0 - MERGE_WIDTH {
        p
    } else {
        p - q
    }
}

/// Every crossing together with its form.
pub fn all_crossings(path: &LagrangianPath, lambda: &LagrangianFrame, tols: &Tolerances) -> Result<Vec<Crossing>> {
    let path = interpolated(path)?;
    let ts = find_crossings_with(&path, lambda, 1e-6, tols)?;
    ts.par_iter()
        .map(|&t| {
            let t = snap_endpoint(t);
            crossing_form_with(&path, lambda, t, tols.fd_step, false, tols)
        })
        .collect()
}

fn snap_endpoint(t: f64) -> f64 {
    if t <= MERGE_WIDTH {
        0.0
    } else if t >= 1.0 - MERGE_WIDTH {
        1.0
    } else {
        t
    }
}
