//! Unitary Maslov index by partition and eigenvalue counting, and the Maslov
//! index of Lagrangian paths through the Souriau map.
//!
//! `k(t, eps)` counts eigenvalues `e^{i phi}` of `U(t)` with `phi` in the closed
//! arc `[pi, pi + eps]`. Over each partition interval `eps` is chosen so that no
//! eigenvalue passes through `e^{i(pi +- eps)}`; the index is the sum of
//! `k(t_j, eps_j) - k(t_{j-1}, eps_j)`.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::path::{LagrangianPath, UnitaryPath};
use crate::souriau::{self, UnitaryMatrix};
use crate::space::LagrangianFrame;
use crate::tol::Tolerances;

const MAX_DEPTH: usize = 40;
/// Step of the one-sided differences giving eigenphase velocities, relative
/// to the interval width.
const DRIFT_STEP: f64 = 1e-2;
/// Phase mismatches below this are ignored by the velocity check.
const DRIFT_FLOOR: f64 = 1e-9;
/// Accepted relative error of the trapezoid prediction of a phase increment.
const DRIFT_REL: f64 = 0.25;
/// Matched displacements below this are accepted without comparing them with
/// the gaps between eigenphases.
const MATCH_SLACK: f64 = 1e-2;
/// Intervals narrower than this are accepted without the velocity check.
const DRIFT_MIN_WIDTH: f64 = 1e-11;

#[derive(Debug, Clone, Serialize)]
pub struct IntervalCount {
    pub t_start: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub k_start: usize,
    pub k_end: usize,
}

/// Matched eigenphase trajectories, one row per sample.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EigenphaseTrace {
    pub times: Vec<f64>,
    pub phases: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexReport {
    pub value: i64,
    pub intervals: Vec<IntervalCount>,
    #[serde(skip)]
    pub trace: EigenphaseTrace,
}

impl IndexReport {
    pub fn partition(&self) -> Vec<f64> {
        let mut p = vec![self.intervals.first().map(|i| i.t_start).unwrap_or(0.0)];
        p.extend(self.intervals.iter().map(|i| i.t_end));
        p
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.intervals.iter().map(|i| i.epsilon).collect()
    }

    /// Recomputes the value from the recorded counts.
    pub fn recount(&self) -> i64 {
        self.intervals.iter().map(|i| i.k_end as i64 - i.k_start as i64).sum()
    }
}

/// Eigenphases in `[0, 2pi)`, with phases within `snap` of `pi` set to `pi`.
pub fn snapped_phases(u: &UnitaryMatrix, snap: f64) -> Result<Vec<f64>> {
    let mut ph = u.eigenphases()?;
    for p in ph.iter_mut() {
        if (*p - PI).abs() <= snap {
            *p = PI;
        }
    }
    ph.sort_by(|a, b| a.total_cmp(b));
    Ok(ph)
}

/// `k(t, eps)` for a sorted phase list.
pub fn arc_count(phases: &[f64], eps: f64) -> usize {
    phases.iter().filter(|&&p| p >= PI && p <= PI + eps).count()
}

fn circ_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Bottleneck matching of two sorted circular phase lists by cyclic shift:
/// `a[i]` is matched with `b[(i + shift) % n]`.
pub fn match_phases(a: &[f64], b: &[f64]) -> usize {
    let n = a.len();
    let mut best = (f64::INFINITY, 0);
    for s in 0..n {
        let cost = (0..n).map(|i| circ_dist(a[i], b[(i + s) % n])).fold(0.0, f64::max);
        if cost < best.0 {
            best = (cost, s);
        }
    }
    best.1
}

/// Midpoint of the widest `eps` in `(0, pi)` kept at least `margin` away from
/// every arc swept by the matched eigenphases between `a` and `b`.
pub fn admissible_epsilon(a: &[f64], b: &[f64], margin: f64) -> Option<f64> {
    let n = a.len();
    let shift = match_phases(a, b);
    let mut forbidden: Vec<(f64, f64)> = vec![(f64::NEG_INFINITY, margin), (PI - margin, f64::INFINITY)];
    for i in 0..n {
        let x = a[i] - PI;
        let y = b[(i + shift) % n] - PI;
        let mut d = (y - x).rem_euclid(TAU);
        if d > PI {
            d -= TAU;
        }
        let (lo, hi) = if d >= 0.0 { (x, x + d) } else { (x + d, x) };
        for k in [-1.0, 0.0, 1.0] {
            let (l, h) = (lo + k * TAU, hi + k * TAU);
            // eps itself in the arc
            if h >= 0.0 && l <= PI {
                forbidden.push((l.max(0.0) - margin, h.min(PI) + margin));
            }
            // -eps in the arc
            if l <= 0.0 && h >= -PI {
                forbidden.push(((-h).max(0.0) - margin, (-l).min(PI) + margin));
            }
        }
    }
    forbidden.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best: Option<(f64, f64)> = None;
    let mut reach = f64::NEG_INFINITY;
    for &(l, h) in &forbidden {
        if l > reach && reach.is_finite() {
            let width = l - reach;
            if best.is_none_or(|b| width > b.0) {
                best = Some((width, 0.5 * (l + reach)));
            }
        }
        reach = reach.max(h);
    }
    best.map(|b| b.1)
}

struct Sample {
    t: f64,
    /// Snapped and sorted.
    phases: Vec<f64>,
    /// Sorted, before snapping.
    raw: Vec<f64>,
}

fn signed_arc(from: f64, to: f64) -> f64 {
    (to - from + PI).rem_euclid(TAU) - PI
}

fn sample_at(t: f64, u: &UnitaryMatrix, tol: &Tolerances) -> Result<Sample> {
    let mut raw = u.eigenphases()?;
    raw.sort_by(|a, b| a.total_cmp(b));
    Ok(Sample { t, phases: snapped_phases(u, tol.minus_one)?, raw })
}

/// Velocities of the eigenphases `raw` at `t`, from a step `h` (negative for a
/// backward difference), aligned with `raw`.
fn velocities(path: &UnitaryPath, raw: &[f64], t: f64, h: f64) -> Option<Vec<f64>> {
    let mut near = path.refiner()?(t + h).ok()?.eigenphases().ok()?;
    near.sort_by(|a, b| a.total_cmp(b));
    let n = raw.len();
    let shift = match_phases(raw, &near);
    Some((0..n).map(|i| signed_arc(raw[i], near[(i + shift) % n]) / h).collect())
}

/// Distance from `p[i]` to the nearest other phase of `p`.
fn gap_at(p: &[f64], i: usize) -> f64 {
    (0..p.len()).filter(|&k| k != i).map(|k| circ_dist(p[i], p[k])).fold(PI, f64::min)
}

/// True when some matched displacement is not small against the gap to the
/// neighbouring eigenphases at either end, so the matching may pair
/// different trajectories.
fn ambiguous_matching(a: &Sample, b: &Sample) -> bool {
    let n = a.raw.len();
    let shift = match_phases(&a.raw, &b.raw);
    (0..n).any(|i| {
        let j = (i + shift) % n;
        let d = circ_dist(a.raw[i], b.raw[j]);
        d > MATCH_SLACK && d > 0.5 * gap_at(&a.raw, i).min(gap_at(&b.raw, j))
    })
}

/// True when, for some matched trajectory, the trapezoid rule on the endpoint
/// velocities does not reproduce the short arc between the endpoint phases.
/// A smooth trajectory passes once the interval is short; one that swept
/// around the circle inside the interval does not.
fn velocity_mismatch(path: &UnitaryPath, a: &Sample, b: &Sample) -> bool {
    if path.refiner().is_none() {
        return false;
    }
    if ambiguous_matching(a, b) {
        return true;
    }
    let w = b.t - a.t;
    let h = DRIFT_STEP * w;
    let (Some(va), Some(vb)) = (velocities(path, &a.raw, a.t, h), velocities(path, &b.raw, b.t, -h)) else {
        return false;
    };
    let n = a.raw.len();
    let shift = match_phases(&a.raw, &b.raw);
    (0..n).any(|i| {
        let j = (i + shift) % n;
        let d = signed_arc(a.raw[i], b.raw[j]);
        let (pa, pb) = (w * va[i], w * vb[j]);
        let miss = (d - 0.5 * (pa + pb)).abs();
        miss > DRIFT_FLOOR && miss > DRIFT_REL * d.abs().max(pa.abs()).max(pb.abs())
    })
}

/// Unitary Maslov index with default tolerances.
pub fn unitary_maslov(path: &UnitaryPath) -> Result<IndexReport> {
    let tol = Tolerances::default();
    unitary_maslov_with(path, &tol, tol.unitary_step)
}

/// Unitary Maslov index; `max_step` bounds the spectral-norm step between
/// adjacent samples.
pub fn unitary_maslov_with(path: &UnitaryPath, tol: &Tolerances, max_step: f64) -> Result<IndexReport> {
    let n = path.start().size();
    if path.samples().iter().any(|(_, u)| u.size() != n) {
        return Err(Error::invalid("all unitaries must have the same size", "path"));
    }
    let path = path.refined(max_step)?;
    let samples = path
        .samples()
        .par_iter()
        .map(|(t, u)| sample_at(*t, u, tol))
        .collect::<Result<Vec<_>>>()?;

    let mut intervals = Vec::new();
    let mut trace_points: Vec<(f64, Vec<f64>)> = vec![(samples[0].t, samples[0].phases.clone())];
    for w in samples.windows(2) {
        count_interval(&path, tol, &w[0], &w[1], 0, &mut intervals, &mut trace_points)?;
    }
    let value = intervals.iter().map(|i: &IntervalCount| i.k_end as i64 - i.k_start as i64).sum();
    Ok(IndexReport { value, intervals, trace: matched_trace(&trace_points) })
}

fn count_interval(
    path: &UnitaryPath,
    tol: &Tolerances,
    a: &Sample,
    b: &Sample,
    depth: usize,
    out: &mut Vec<IntervalCount>,
    trace: &mut Vec<(f64, Vec<f64>)>,
) -> Result<()> {
    let suspicious = depth < MAX_DEPTH && b.t - a.t > DRIFT_MIN_WIDTH && velocity_mismatch(path, a, b);
    if let Some(eps) = admissible_epsilon(&a.phases, &b.phases, tol.clearance).filter(|_| !suspicious) {
        out.push(IntervalCount {
            t_start: a.t,
            t_end: b.t,
            epsilon: eps,
            k_start: arc_count(&a.phases, eps),
            k_end: arc_count(&b.phases, eps),
        });
        trace.push((b.t, b.phases.clone()));
        return Ok(());
    }
    let location = format!("t in [{}, {}]", a.t, b.t);
    let refiner = path
        .refiner()
        .ok_or_else(|| Error::ambiguous("no admissible epsilon; path is undersampled", location.clone()))?;
    if depth >= MAX_DEPTH || b.t - a.t < 1e-12 {
        return Err(Error::ambiguous("no admissible epsilon at the finest resolution", location));
    }
    let tm = 0.5 * (a.t + b.t);
    let u = refiner(tm)?;
    let m = sample_at(tm, &u, tol)?;
    count_interval(path, tol, a, &m, depth + 1, out, trace)?;
    count_interval(path, tol, &m, b, depth + 1, out, trace)
}

/// Reorders each row so that columns follow continuous eigenphase trajectories.
pub fn matched_trace(points: &[(f64, Vec<f64>)]) -> EigenphaseTrace {
    let mut times = Vec::with_capacity(points.len());
    let mut phases: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    // position of trajectory j inside the sorted list of the current row
    let mut slot: Vec<usize> = (0..points.first().map(|p| p.1.len()).unwrap_or(0)).collect();
    for (k, (t, row)) in points.iter().enumerate() {
        if k > 0 {
            let prev = &points[k - 1].1;
            let shift = match_phases(prev, row);
            let n = row.len();
            for s in slot.iter_mut() {
                *s = (*s + shift) % n;
            }
        }
        times.push(*t);
        phases.push(slot.iter().map(|&s| row[s]).collect());
    }
    EigenphaseTrace { times, phases }
}

/// Maslov index of a Lagrangian path relative to `lambda`.
pub fn maslov(path: &LagrangianPath, lambda: &LagrangianFrame) -> Result<IndexReport> {
    maslov_with(path, lambda, &Tolerances::default())
}

pub fn maslov_with(path: &LagrangianPath, lambda: &LagrangianFrame, tol: &Tolerances) -> Result<IndexReport> {
    let upath = souriau_path(path, lambda, tol)?;
    unitary_maslov_with(&upath, tol, (2.0 * tol.frame_step).max(tol.unitary_step))
}

/// `t -> S_lambda(mu(t))` after refining the path to the projection step bound.
pub fn souriau_path(path: &LagrangianPath, lambda: &LagrangianFrame, tol: &Tolerances) -> Result<UnitaryPath> {
    for (k, (_, f)) in path.samples().iter().enumerate() {
        lambda.ensure_same_space(f, &format!("samples[{k}]"))?;
    }
    let path = path.refined(tol.frame_step)?;
    let lambda = lambda.clone();
    path.map(move |f| souriau::souriau(&lambda, f))
}
