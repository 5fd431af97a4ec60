//! Sampled paths on `[0, 1]` with an optional generator for arbitrary times.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg;
use crate::souriau::UnitaryMatrix;
use crate::space::LagrangianFrame;

pub type Refiner<P> = Arc<dyn Fn(f64) -> Result<P> + Send + Sync>;

/// Points that can be sampled along a path.
pub trait PathPoint: Clone + Send + Sync + 'static {
    /// Step size used by the adequacy condition.
    fn gap(&self, other: &Self) -> f64;
}

impl PathPoint for UnitaryMatrix {
    fn gap(&self, other: &Self) -> f64 {
        self.distance(other)
    }
}

impl PathPoint for LagrangianFrame {
    fn gap(&self, other: &Self) -> f64 {
        linalg::norm2(&(self.projection() - other.projection()))
    }
}

/// Samples `(t_k, p_k)` with `t_0 = 0 < t_1 < ... < t_last = 1`.
#[derive(Clone)]
pub struct Path<P> {
    samples: Vec<(f64, P)>,
    refiner: Option<Refiner<P>>,
}

impl<P> std::fmt::Debug for Path<P> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Path")
            .field("times", &self.samples.iter().map(|s| s.0).collect::<Vec<_>>())
            .field("refiner", &self.refiner.is_some())
            .finish()
    }
}

pub type UnitaryPath = Path<UnitaryMatrix>;
pub type LagrangianPath = Path<LagrangianFrame>;

const MAX_SAMPLES: usize = 1 << 20;
const MIN_WIDTH: f64 = 1e-12;

impl<P: PathPoint> Path<P> {
    pub fn new(samples: Vec<(f64, P)>) -> Result<Self> {
        validate_times(samples.iter().map(|s| s.0))?;
        Ok(Path { samples, refiner: None })
    }

    pub fn with_refiner(samples: Vec<(f64, P)>, refiner: Refiner<P>) -> Result<Self> {
        validate_times(samples.iter().map(|s| s.0))?;
        Ok(Path { samples, refiner: Some(refiner) })
    }

    /// Samples `f` on a uniform grid of `intervals + 1` points and keeps `f` as refiner.
    pub fn from_fn<F>(f: F, intervals: usize) -> Result<Self>
    where
        F: Fn(f64) -> Result<P> + Send + Sync + 'static,
    {
        let intervals = intervals.max(1);
        let samples = (0..=intervals)
            .into_par_iter()
            .map(|k| {
                let t = k as f64 / intervals as f64;
                f(t).map(|p| (t, p)).map_err(|e| e.at(&format!("t={t}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Path { samples, refiner: Some(Arc::new(f)) })
    }

    pub fn constant(p: P) -> Self {
        let q = p.clone();
        Path { samples: vec![(0.0, p.clone()), (1.0, p)], refiner: Some(Arc::new(move |_| Ok(q.clone()))) }
    }

    pub fn samples(&self) -> &[(f64, P)] {
        &self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn refiner(&self) -> Option<&Refiner<P>> {
        self.refiner.as_ref()
    }

    pub fn has_refiner(&self) -> bool {
        self.refiner.is_some()
    }

    pub fn start(&self) -> &P {
        &self.samples[0].1
    }

    pub fn end(&self) -> &P {
        &self.samples[self.samples.len() - 1].1
    }

    pub fn without_refiner(&self) -> Self {
        Path { samples: self.samples.clone(), refiner: None }
    }

    /// The point at `t`: a stored sample or the refiner's value.
    pub fn at(&self, t: f64) -> Result<P> {
        if let Ok(k) = self.samples.binary_search_by(|s| s.0.total_cmp(&t)) {
            return Ok(self.samples[k].1.clone());
        }
        match &self.refiner {
            Some(r) => r(t),
            None => Err(Error::precondition("path has no refiner for off-sample times", format!("t={t}"))),
        }
    }

    /// Time reversal `t -> 1 - t`.
    pub fn reverse(&self) -> Self {
        let samples = self.samples.iter().rev().map(|(t, p)| (1.0 - t, p.clone())).collect();
        let refiner = self.refiner.clone().map(|r| -> Refiner<P> { Arc::new(move |t| r(1.0 - t)) });
        Path { samples, refiner }
    }

    /// Runs `self` on `[0, 1/2]` and `other` on `[1/2, 1]`.
    pub fn catenate(&self, other: &Self) -> Result<Self> {
        let gap = self.end().gap(other.start());
        if gap > 1e-9 {
            return Err(Error::invalid(format!("endpoints do not match (gap {gap:.3e})"), "catenate"));
        }
        let mut samples: Vec<(f64, P)> = self.samples.iter().map(|(t, p)| (0.5 * t, p.clone())).collect();
        samples.extend(other.samples.iter().skip(1).map(|(t, p)| (0.5 + 0.5 * t, p.clone())));
        let refiner = match (&self.refiner, &other.refiner) {
            (Some(a), Some(b)) => {
                let (a, b) = (a.clone(), b.clone());
                Some(Arc::new(move |t: f64| if t <= 0.5 { a(2.0 * t) } else { b(2.0 * t - 1.0) }) as Refiner<P>)
            }
            _ => None,
        };
        Ok(Path { samples, refiner })
    }

    /// The piece on `[a, b]`, rescaled to `[0, 1]`.
    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&a) || !(a < b && b <= 1.0) {
            return Err(Error::invalid("need 0 <= a < b <= 1", "restrict"));
        }
        let w = b - a;
        let mut samples = vec![(0.0, self.at(a)?)];
        for (t, p) in &self.samples {
            if *t > a && *t < b {
                samples.push(((t - a) / w, p.clone()));
            }
        }
        samples.push((1.0, self.at(b)?));
        let refiner = self.refiner.clone().map(|r| -> Refiner<P> { Arc::new(move |s| r(a + s * w)) });
        Ok(Path { samples, refiner })
    }

    /// Keeps the sampled points but assigns new strictly increasing times;
    /// the refiner is composed with the piecewise-linear time map.
    pub fn retime(&self, times: &[f64]) -> Result<Self> {
        if times.len() != self.samples.len() {
            return Err(Error::invalid("time count mismatch", "retime"));
        }
        validate_times(times.iter().copied())?;
        let samples = times.iter().zip(&self.samples).map(|(&t, (_, p))| (t, p.clone())).collect();
        let refiner = self.refiner.clone().map(|r| -> Refiner<P> {
            let old = self.times();
            let new = times.to_vec();
            Arc::new(move |s| r(piecewise_linear(&new, &old, s)))
        });
        Ok(Path { samples, refiner })
    }

    /// Applies `f` pointwise; the refiner is composed with `f`.
    pub fn map<Q, F>(&self, f: F) -> Result<Path<Q>>
    where
        Q: PathPoint,
        F: Fn(&P) -> Result<Q> + Send + Sync + 'static,
    {
        let samples = self
            .samples
            .par_iter()
            .enumerate()
            .map(|(k, (t, p))| f(p).map(|q| (*t, q)).map_err(|e| e.at(&format!("samples[{k}]"))))
            .collect::<Result<Vec<_>>>()?;
        let f = Arc::new(f);
        let refiner = self.refiner.clone().map(|r| -> Refiner<Q> { Arc::new(move |t| r(t).and_then(|p| f(&p))) });
        Ok(Path { samples, refiner })
    }

    /// Inserts midpoints (via the refiner) until adjacent samples are within
    /// `max_gap`. With a refiner, an interval is only accepted once its
    /// midpoint is also within `max_gap` of both ends, which catches
    /// excursions that leave and return between two samples. Without a
    /// refiner an oversized step is an error.
    pub fn refined(&self, max_gap: f64) -> Result<Self> {
        let mut samples = self.samples.clone();
        let Some(r) = self.refiner.as_ref() else {
            if let Some(k) = (0..samples.len() - 1).find(|&k| samples[k].1.gap(&samples[k + 1].1) > max_gap) {
                return Err(Error::precondition(
                    format!("adjacent samples differ by more than {max_gap} and the path has no refiner"),
                    format!("samples[{k}]..samples[{}]", k + 1),
                ));
            }
            return Ok(Path { samples, refiner: None });
        };
        // verified[k] covers the interval samples[k]..samples[k + 1]
        let mut verified = vec![false; samples.len() - 1];
        loop {
            let open: Vec<usize> = (0..verified.len()).filter(|&k| !verified[k]).collect();
            if open.is_empty() {
                return Ok(Path { samples, refiner: self.refiner.clone() });
            }
            if samples.len() + open.len() > MAX_SAMPLES {
                return Err(Error::precondition("refinement exceeded the sample budget", "refine"));
            }
            let checked = open
                .par_iter()
                .map(|&k| {
                    let (a, b) = (&samples[k], &samples[k + 1]);
                    let m = 0.5 * (a.0 + b.0);
                    if b.0 - a.0 < MIN_WIDTH {
                        return Err(Error::precondition(
                            "path appears discontinuous (step persists at minimal width)",
                            format!("t={}", a.0),
                        ));
                    }
                    let p = r(m)?;
                    let ok = a.1.gap(&b.1) <= max_gap && a.1.gap(&p) <= max_gap && p.gap(&b.1) <= max_gap;
                    Ok((k, ok, (m, p)))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut merged = Vec::with_capacity(samples.len() + checked.len());
            let mut flags = Vec::with_capacity(merged.capacity());
            let mut it = checked.into_iter().peekable();
            let last = samples.len() - 1;
            for (k, s) in samples.into_iter().enumerate() {
                merged.push(s);
                if k == last {
                    break;
                }
                match it.peek() {
                    Some(&(ck, ok, _)) if ck == k => {
                        let (_, _, mid) = it.next().unwrap();
                        if ok {
                            flags.push(true);
                        } else {
                            merged.push(mid);
                            flags.extend([false, false]);
                        }
                    }
                    _ => flags.push(verified[k]),
                }
            }
            samples = merged;
            verified = flags;
        }
    }

    /// Splits every interval in two (refiner required).
    pub fn bisected(&self) -> Result<Self> {
        let r = self
            .refiner
            .as_ref()
            .ok_or_else(|| Error::precondition("bisection needs a refiner", "refine"))?;
        let mids = (0..self.samples.len() - 1)
            .into_par_iter()
            .map(|k| {
                let m = 0.5 * (self.samples[k].0 + self.samples[k + 1].0);
                r(m).map(|p| (m, p))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut samples = Vec::with_capacity(2 * self.samples.len());
        for (k, s) in self.samples.iter().enumerate() {
            samples.push(s.clone());
            if k < mids.len() {
                samples.push(mids[k].clone());
            }
        }
        Ok(Path { samples, refiner: self.refiner.clone() })
    }
}

fn validate_times(times: impl Iterator<Item = f64>) -> Result<()> {
    let ts: Vec<f64> = times.collect();
    if ts.len() < 2 {
        return Err(Error::invalid("a path needs at least two samples", "samples"));
    }
    if ts[0] != 0.0 || ts[ts.len() - 1] != 1.0 {
        return Err(Error::invalid("sample times must start at 0 and end at 1", "samples"));
    }
    for k in 1..ts.len() {
        if !(ts[k] > ts[k - 1]) {
            return Err(Error::invalid("sample times must be strictly increasing", format!("samples[{k}].t")));
        }
    }
    Ok(())
}

/// Interpolates the map `xs[k] -> ys[k]` linearly at `x`.
pub(crate) fn piecewise_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = match xs.binary_search_by(|v| v.total_cmp(&x)) {
        Ok(k) => return ys[k],
        Err(k) => k.clamp(1, xs.len() - 1),
    };
    let (x0, x1) = (xs[k - 1], xs[k]);
    let s = (x - x0) / (x1 - x0);
    ys[k - 1] + s * (ys[k] - ys[k - 1])
}
