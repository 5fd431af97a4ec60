//! Spectral flow of the boundary-value family `bJ(d/dt + B) + C_t` on `[0, 1]`
//! with boundary conditions `u(0) ∈ lambda_0`, `u(1) ∈ lambda_1`, where
//! `bJ = [[0, I], [-I, 0]]` and `bJ B = -B bJ`. The Cauchy data of the kernel
//! are the graphs of the fundamental solutions, which lets the spectral flow
//! be compared with a Maslov index in `R^{2N} ⊞ R^{2N}`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, RMat};
use crate::maslov;
use crate::path::{LagrangianPath, Path};
use crate::reduction::BoxSpace;
use crate::space::{standard_j, LagrangianFrame, SymplecticSpace};
use crate::tol::Tolerances;

pub const DEFAULT_WINDOW: f64 = 8.0;
/// Grid step of the shooting scan.
const COARSE_STEP: f64 = 0.02;
/// Half-width of the window used for counting the flow, and its grid step.
const FLOW_WINDOW: f64 = 1.5;
const FLOW_STEP: f64 = 0.004;
const MAX_DEPTH: usize = 24;

/// `[[0, I], [-I, 0]]`.
pub fn bold_j(n: usize) -> RMat {
    -standard_j(n)
}

fn check_constraints(b: &RMat, c: &RMat, location: &str) -> Result<()> {
    let m = b.nrows();
    if m == 0 || m % 2 != 0 || b.ncols() != m || c.shape() != (m, m) {
        return Err(Error::invalid("B and C must be square of equal even size", location));
    }
    if !linalg::is_finite(b) || !linalg::is_finite(c) {
        return Err(Error::invalid("non-finite entries", location));
    }
    let scale = linalg::max_abs(b).max(linalg::max_abs(c)).max(1.0);
    if linalg::max_abs(&(b - b.transpose())) > 1e-10 * scale {
        return Err(Error::invalid("B is not symmetric", location));
    }
    if linalg::max_abs(&(c - c.transpose())) > 1e-10 * scale {
        return Err(Error::invalid("C is not symmetric", location));
    }
    let j = bold_j(m / 2);
    if linalg::max_abs(&(&j * b + b * &j)) > 1e-10 * scale {
        return Err(Error::invalid("B does not anticommute with bJ", location));
    }
    Ok(())
}

/// Solution map `Phi = exp(-B + bJ C - s bJ)` of `bJ u' + bJ B u + C u = s u`.
pub fn fundamental_solution(b: &RMat, c: &RMat, s: f64) -> Result<RMat> {
    check_constraints(b, c, "fundamental_solution")?;
    Ok(propagator(b, c, s))
}

fn propagator(b: &RMat, c: &RMat, s: f64) -> RMat {
    let j = bold_j(b.nrows() / 2);
    linalg::expm(&(-b + &j * c - &j * s))
}

#[derive(Debug, Clone)]
pub struct BoundaryProblem {
    n: usize,
    b: RMat,
    family: Vec<(f64, RMat)>,
    lambda0: LagrangianFrame,
    lambda1: LagrangianFrame,
}

impl BoundaryProblem {
    pub fn new(
        b: RMat,
        family: Vec<(f64, RMat)>,
        lambda0: LagrangianFrame,
        lambda1: LagrangianFrame,
    ) -> Result<Self> {
        let m = b.nrows();
        if family.len() < 2 {
            return Err(Error::invalid("family needs at least two samples", "family"));
        }
        for (k, (t, c)) in family.iter().enumerate() {
            check_constraints(&b, c, &format!("family[{k}]"))?;
            if !t.is_finite() || (k > 0 && !(*t > family[k - 1].0)) {
                return Err(Error::invalid("family times must be finite and strictly increasing", format!("family[{k}].t")));
            }
        }
        let n = m / 2;
        for (name, l) in [("lambda0", &lambda0), ("lambda1", &lambda1)] {
            if l.n() != n || !l.space().is_standard() {
                return Err(Error::invalid("boundary Lagrangian must live in the standard R^{2N}", name));
            }
        }
        lambda0.ensure_same_space(&lambda1, "lambda1")?;
        Ok(BoundaryProblem { n, b, family, lambda0, lambda1 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> &RMat {
        &self.b
    }

    pub fn family(&self) -> &[(f64, RMat)] {
        &self.family
    }

    pub fn lambda0(&self) -> &LagrangianFrame {
        &self.lambda0
    }

    pub fn lambda1(&self) -> &LagrangianFrame {
        &self.lambda1
    }

    /// Family sample times rescaled to `[0, 1]`.
    pub fn normalized_times(&self) -> Vec<f64> {
        let (t0, t1) = (self.family[0].0, self.family[self.family.len() - 1].0);
        let k = self.family.len();
        self.family
            .iter()
            .enumerate()
            .map(|(i, (t, _))| if i == 0 { 0.0 } else if i == k - 1 { 1.0 } else { (t - t0) / (t1 - t0) })
            .collect()
    }

    /// `C` at normalized time `tau`, linear between samples.
    pub fn c_at(&self, tau: f64) -> RMat {
        let ts = self.normalized_times();
        let k = match ts.binary_search_by(|v| v.total_cmp(&tau)) {
            Ok(k) => return self.family[k].1.clone(),
            Err(k) => k.clamp(1, ts.len() - 1) - 1,
        };
        let s = (tau - ts[k]) / (ts[k + 1] - ts[k]);
        &self.family[k].1 * (1.0 - s) + &self.family[k + 1].1 * s
    }

    /// The same problem with the family run backwards.
    pub fn reversed(&self) -> Self {
        let (t0, t1) = (self.family[0].0, self.family[self.family.len() - 1].0);
        let family = self.family.iter().rev().map(|(t, c)| (t0 + t1 - t, c.clone())).collect();
        BoundaryProblem { family, ..self.clone() }
    }

    /// The problem on the part of the family with normalized time in `[a, b]`.
    pub fn restricted(&self, a: f64, b: f64) -> Result<Self> {
        if !(0.0 <= a && a < b && b <= 1.0) {
            return Err(Error::invalid("need 0 <= a < b <= 1", "restrict"));
        }
        let ts = self.normalized_times();
        let mut family = vec![(a, self.c_at(a))];
        for (tau, (_, c)) in ts.iter().zip(&self.family) {
            if *tau > a && *tau < b {
                family.push((*tau, c.clone()));
            }
        }
        family.push((b, self.c_at(b)));
        Ok(BoundaryProblem { family, ..self.clone() })
    }

    pub fn boundary_space(&self) -> Result<BoxSpace> {
        BoxSpace::new(self.lambda0.space())
    }

    /// `lambda_0 ⊞ lambda_1`.
    pub fn domain(&self, boxed: &BoxSpace) -> Result<LagrangianFrame> {
        boxed.frame(&self.lambda0, &self.lambda1)
    }

    fn shooting_matrix(&self, c: &RMat, s: f64) -> RMat {
        let phi = propagator(&self.b, c, s);
        linalg::hstack(&[&(phi * self.lambda0.matrix()), self.lambda1.matrix()])
    }

    /// Eigenvalues of the operator at normalized time `tau` inside `[-window, window]`.
    pub fn eigenvalues(&self, tau: f64, window: f64) -> Result<Vec<f64>> {
        let c = self.c_at(tau);
        self.eigenvalues_for(&c, window, COARSE_STEP)
    }

    fn eigenvalues_for(&self, c: &RMat, window: f64, step: f64) -> Result<Vec<f64>> {
        let cells = (2.0 * window / step).ceil() as usize;
        let grid: Vec<f64> = (0..=cells).map(|i| -window + 2.0 * window * i as f64 / cells as f64).collect();
        let vals: Vec<(f64, f64)> = grid
            .iter()
            .map(|&s| {
                let m = self.shooting_matrix(c, s);
                let d = m.clone().determinant();
                let sv = m.singular_values();
                (d, sv.min() / sv.max())
            })
            .collect();
        let mut roots: Vec<f64> = Vec::new();
        let det = |s: f64| self.shooting_matrix(c, s).determinant();
        let smin = |s: f64| {
            let sv = self.shooting_matrix(c, s).singular_values();
            sv.min() / sv.max()
        };
        for i in 0..cells {
            let (a, b) = (grid[i], grid[i + 1]);
            let (da, db) = (vals[i].0, vals[i + 1].0);
            if da == 0.0 {
                roots.push(a);
                continue;
            }
            if da * db < 0.0 {
                roots.push(bisect_det(&det, a, da, b));
            }
        }
        // even-multiplicity roots: local minima of the smallest singular value
        for i in 1..cells {
            let (p, q, r) = (vals[i - 1].1, vals[i].1, vals[i + 1].1);
            if q < p && q <= r && q < 0.05 {
                let (a, b) = (grid[i - 1], grid[i + 1]);
                if vals[i - 1].0 * vals[i + 1].0 < 0.0 {
                    continue;
                }
                let (s, v) = golden_min(&smin, a, b);
                if v < 1e-7 && !roots.iter().any(|&x| (x - s).abs() < step) {
                    let m = self.shooting_matrix(c, s);
                    let sv = m.singular_values();
                    let mult = sv.iter().filter(|&&x| x < 1e-4 * sv.max()).count().max(1);
                    for _ in 0..mult {
                        roots.push(s);
                    }
                }
            }
        }
        roots.sort_by(|a, b| a.total_cmp(b));
        Ok(roots)
    }

    /// Sorted eigenvalues in a small window around 0, on a fine grid.
    fn flow_eigenvalues(&self, tau: f64) -> Result<Vec<f64>> {
        let c = self.c_at(tau);
        self.eigenvalues_for(&c, FLOW_WINDOW, FLOW_STEP)
    }
}

fn bisect_det(det: &dyn Fn(f64) -> f64, mut a: f64, mut da: f64, mut b: f64) -> f64 {
    while b - a > 1e-10 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let dm = det(m);
        if dm == 0.0 {
            return m;
        }
        if (dm < 0.0) == (da < 0.0) {
            a = m;
            da = dm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Path of Cauchy data spaces `{(v, Phi_t v)}` in `R^{2N} ⊞ R^{2N}` over
/// normalized time.
pub fn cauchy_data_path(bp: &BoundaryProblem) -> Result<(BoxSpace, LagrangianPath)> {
    let boxed = bp.boundary_space()?;
    let ts = bp.normalized_times();
    let samples = ts
        .par_iter()
        .zip(bp.family.par_iter())
        .map(|(&tau, (_, c))| Ok((tau, boxed.graph(&propagator(&bp.b, c, 0.0))?)))
        .collect::<Result<Vec<_>>>()?;
    let (bp2, bx) = (bp.clone(), boxed.clone());
    let path = Path::with_refiner(samples, Arc::new(move |tau| bx.graph(&propagator(&bp2.b, &bp2.c_at(tau), 0.0))))?;
    Ok((boxed, path))
}

/// Eigenvalues in the window at every family sample.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EigenvalueTrace {
    pub times: Vec<f64>,
    pub eigenvalues: Vec<Vec<f64>>,
}

pub fn eigenvalue_trace(bp: &BoundaryProblem, window: f64) -> Result<EigenvalueTrace> {
    let ts: Vec<f64> = bp.family.iter().map(|f| f.0).collect();
    let taus = bp.normalized_times();
    let eigenvalues = taus.par_iter().map(|&tau| bp.eigenvalues(tau, window)).collect::<Result<Vec<_>>>()?;
    Ok(EigenvalueTrace { times: ts, eigenvalues })
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowInterval {
    pub t_start: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub k_start: usize,
    pub k_end: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralFlowReport {
    pub value: i64,
    pub intervals: Vec<FlowInterval>,
}

/// `k(tau, eps)`: eigenvalues in the closed interval `[0, eps]`.
fn flow_count(eigs: &[f64], eps: f64, snap: f64) -> usize {
    eigs.iter().filter(|&&s| (s >= 0.0 || s.abs() <= snap) && s <= eps).count()
}

/// Matches sorted eigenvalue lists by an index offset minimizing the largest
/// displacement among eigenvalues in the inner part of the window.
fn match_offset(a: &[f64], b: &[f64], inner: f64) -> Option<(i64, f64)> {
    let mut best: Option<(i64, f64)> = None;
    for off in -3i64..=3 {
        let mut cost: f64 = 0.0;
        let mut ok = true;
        for (i, &x) in a.iter().enumerate() {
            let j = i as i64 + off;
            let y = if j >= 0 && (j as usize) < b.len() { Some(b[j as usize]) } else { None };
            match y {
                Some(y) => {
                    if x.abs() < inner || y.abs() < inner {
                        cost = cost.max((x - y).abs());
                    }
                }
                None => {
                    if x.abs() < inner {
                        ok = false;
                    }
                }
            }
        }
        for (j, &y) in b.iter().enumerate() {
            let i = j as i64 - off;
            if (i < 0 || i as usize >= a.len()) && y.abs() < inner {
                ok = false;
            }
        }
        if ok && best.is_none_or(|b| cost < b.1) {
            best = Some((off, cost));
        }
    }
    best
}

/// Widest-gap `eps` in `(0, cap)` avoiding the swept ranges `±[lo, hi]`.
fn flow_epsilon(a: &[f64], b: &[f64], cap: f64, margin: f64) -> Option<f64> {
    let (off, _) = match_offset(a, b, 1.5 * cap)?;
    let mut forbidden: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, margin), (cap, f64::INFINITY)];
    for (i, &x) in a.iter().enumerate() {
        let j = i as i64 + off;
        if j < 0 || j as usize >= b.len() {
            continue;
        }
        let y = b[j as usize];
        let (lo, hi) = (x.min(y), x.max(y));
        if hi >= 0.0 {
            forbidden.push((lo.max(0.0) - margin, hi + margin));
        }
        if lo <= 0.0 {
            forbidden.push(((-hi).max(0.0) - margin, -lo + margin));
        }
    }
    forbidden.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best: Option<(f64, f64)> = None;
    let mut reach = f64::NEG_INFINITY;
    for &(l, h) in &forbidden {
        if l > reach && reach.is_finite() {
            let w = l - reach;
            if best.is_none_or(|b| w > b.0) {
                best = Some((w, 0.5 * (l + reach)));
            }
        }
        reach = reach.max(h);
    }
    best.map(|b| b.1)
}

/// Net number of eigenvalues crossing 0 upward minus downward, counted with
/// `k(t, eps)` over a partition as in the unitary Maslov index.
pub fn spectral_flow(bp: &BoundaryProblem, window: f64) -> Result<SpectralFlowReport> {
    if !(window > 0.0) {
        return Err(Error::invalid("window must be positive", "window"));
    }
    let tol = Tolerances::default();
    for tau in [0.0, 1.0] {
        let e = bp.eigenvalues(tau, window + 0.1)?;
        if e.iter().any(|s| (s.abs() - window).abs() <= 1e-8) {
            return Err(Error::precondition("eigenvalue on the window boundary", format!("t={tau}")));
        }
    }
    let taus = bp.normalized_times();
    let eigs = taus.par_iter().map(|&tau| bp.flow_eigenvalues(tau)).collect::<Result<Vec<_>>>()?;
    let cap = (0.5 * window).min(0.5 * FLOW_WINDOW);
    let mut intervals = Vec::new();
    for k in 0..taus.len() - 1 {
        flow_interval(bp, cap, &tol, (taus[k], &eigs[k]), (taus[k + 1], &eigs[k + 1]), 0, &mut intervals)?;
    }
    let value = intervals.iter().map(|i: &FlowInterval| i.k_end as i64 - i.k_start as i64).sum();
    Ok(SpectralFlowReport { value, intervals })
}

fn flow_interval(
    bp: &BoundaryProblem,
    cap: f64,
    tol: &Tolerances,
    a: (f64, &[f64]),
    b: (f64, &[f64]),
    depth: usize,
    out: &mut Vec<FlowInterval>,
) -> Result<()> {
    let snap = 1e-9;
    if let Some(eps) = flow_epsilon(a.1, b.1, cap, tol.clearance) {
        out.push(FlowInterval {
            t_start: a.0,
            t_end: b.0,
            epsilon: eps,
            k_start: flow_count(a.1, eps, snap),
            k_end: flow_count(b.1, eps, snap),
        });
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::ambiguous(
            "no admissible epsilon: tangential or unresolved eigenvalue crossing",
            format!("t in [{}, {}]", a.0, b.0),
        ));
    }
    let tm = 0.5 * (a.0 + b.0);
    let em = bp.flow_eigenvalues(tm)?;
    flow_interval(bp, cap, tol, a, (tm, &em), depth + 1, out)?;
    flow_interval(bp, cap, tol, (tm, &em), b, depth + 1, out)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoincidenceReport {
    pub sf: Option<i64>,
    pub mas: Option<i64>,
    /// `None` when either side could not be decided.
    pub equal: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sf_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mas_error: Option<String>,
}

/// Spectral flow by shooting and the Maslov index of the Cauchy data path
/// against `lambda_0 ⊞ lambda_1`, computed independently.
pub fn verify_coincidence(bp: &BoundaryProblem, window: f64) -> Result<CoincidenceReport> {
    let sf = spectral_flow(bp, window);
    let mas = (|| {
        let (boxed, path) = cauchy_data_path(bp)?;
        let domain = bp.domain(&boxed)?;
        maslov::maslov(&path, &domain).map(|r| r.value)
    })();
    for r in [sf.as_ref().err(), mas.as_ref().err()].into_iter().flatten() {
        if r.kind() == crate::error::ErrorKind::Validation {
            return Err(r.clone());
        }
    }
    let (sf_v, mas_v) = (sf.as_ref().ok().map(|r| r.value), mas.as_ref().ok().copied());
    Ok(CoincidenceReport {
        sf: sf_v,
        mas: mas_v,
        equal: match (sf_v, mas_v) {
            (Some(a), Some(b)) => Some(a == b),
            _ => None,
        },
        sf_error: sf.err().map(|e| e.to_string()),
        mas_error: mas.err().map(|e| e.to_string()),
    })
}

/// Standard space for boundary data of half-size `n`.
pub fn boundary_base(n: usize) -> Result<Arc<SymplecticSpace>> {
    Ok(Arc::new(SymplecticSpace::standard(n)?))
}
