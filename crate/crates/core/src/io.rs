//! Strict JSON schemas for problem files, their conversion into validated
//! objects, a 17-significant-digit JSON writer and CSV trace export.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indices::LiftedUnitary;
use crate::linalg::{CMat, RMat};
use crate::maslov::EigenphaseTrace;
use crate::path::{LagrangianPath, Path, UnitaryPath};
use crate::reduction::{PolarizedPair, PolarizedPairSpec};
use crate::souriau::UnitaryMatrix;
use crate::space::{LagrangianFrame, SymplecticSpace};
use crate::spectral::{BoundaryProblem, EigenvalueTrace};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest accepted half-dimension in problem files.
pub const MAX_N: usize = 64;

/// `2n` rows of `n` numbers.
pub type FrameJson = Vec<Vec<f64>>;
/// Rows of `[re, im]` pairs.
pub type ComplexMatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FrameSample {
    pub t: f64,
    pub frame: FrameJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UnitarySample {
    pub t: f64,
    #[serde(rename = "U")]
    pub u: ComplexMatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairSample {
    pub t: f64,
    pub mu: FrameJson,
    pub lambda: FrameJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LiftedJson {
    #[serde(rename = "U")]
    pub u: ComplexMatrixJson,
    pub alpha: f64,
}

/// Input of `maslov` and `crossings`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LagrangianPathInput {
    pub version: u32,
    pub n: usize,
    pub lambda: FrameJson,
    pub path: Vec<FrameSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct UnitaryPathInput {
    pub version: u32,
    pub n: usize,
    pub path: Vec<UnitarySample>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct KashiwaraInput {
    pub version: u32,
    pub n: usize,
    pub frames: Vec<FrameJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComplexKashiwaraInput {
    pub version: u32,
    pub n: usize,
    pub unitaries: Vec<ComplexMatrixJson>,
    #[serde(default)]
    pub lambda: Option<FrameJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LerayInput {
    pub version: u32,
    pub n: usize,
    pub first: LiftedJson,
    pub second: LiftedJson,
    #[serde(default)]
    pub probe: Option<LiftedJson>,
    #[serde(default)]
    pub lambda: Option<FrameJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct HormanderInput {
    pub version: u32,
    pub n: usize,
    pub ell0: FrameJson,
    pub ell1: FrameJson,
    pub lambda: FrameJson,
    pub mu: FrameJson,
    #[serde(default)]
    pub path: Option<Vec<FrameSample>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PairPathInput {
    pub version: u32,
    pub n: usize,
    pub path: Vec<PairSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ReduceInput {
    pub version: u32,
    pub polarized: PolarizedPairSpec,
    pub path: Vec<FrameSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FamilySample {
    pub t: f64,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
pub struct BoundaryProblemInput {
    pub version: u32,
    pub N: usize,
    pub B: Vec<Vec<f64>>,
    pub family: Vec<FamilySample>,
    pub lambda0: FrameJson,
    pub lambda1: FrameJson,
    #[serde(default)]
    pub window: Option<f64>,
}

fn parse_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        Error::invalid(e.to_string(), format!("line {} column {}", e.line(), e.column()))
    })
}

fn check_version(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::invalid(format!("unsupported schema version {v}, expected {SCHEMA_VERSION}"), "version"));
    }
    Ok(())
}

fn check_n(n: usize, name: &str) -> Result<()> {
    if n == 0 || n > MAX_N {
        return Err(Error::invalid(format!("half-dimension must lie in 1..={MAX_N}"), name));
    }
    Ok(())
}

pub fn real_matrix(rows: &[Vec<f64>], nrows: usize, ncols: usize, location: &str) -> Result<RMat> {
    if rows.len() != nrows {
        return Err(Error::invalid(format!("expected {nrows} rows, got {}", rows.len()), location));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::invalid(format!("expected {ncols} columns, got {}", r.len()), format!("{location}[{i}]")));
        }
    }
    Ok(RMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn complex_matrix(rows: &ComplexMatrixJson, n: usize, location: &str) -> Result<CMat> {
    if rows.len() != n {
        return Err(Error::invalid(format!("expected {n} rows, got {}", rows.len()), location));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Error::invalid(format!("expected {n} columns, got {}", r.len()), format!("{location}[{i}]")));
        }
    }
    Ok(CMat::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

pub fn frame_from_json(space: &Arc<SymplecticSpace>, rows: &FrameJson, location: &str) -> Result<LagrangianFrame> {
    let n = space.n();
    let m = real_matrix(rows, 2 * n, n, location)?;
    LagrangianFrame::new(space, m).map_err(|e| e.at(location))
}

pub fn unitary_from_json(rows: &ComplexMatrixJson, n: usize, location: &str) -> Result<UnitaryMatrix> {
    UnitaryMatrix::new(complex_matrix(rows, n, location)?).map_err(|e| e.at(location))
}

pub fn lifted_from_json(l: &LiftedJson, n: usize, location: &str) -> Result<LiftedUnitary> {
    let u = unitary_from_json(&l.u, n, &format!("{location}.U"))?;
    LiftedUnitary::new(u, l.alpha).map_err(|e| e.at(location))
}

pub fn frame_path(space: &Arc<SymplecticSpace>, samples: &[FrameSample], location: &str) -> Result<LagrangianPath> {
    let pts = samples
        .iter()
        .enumerate()
        .map(|(k, s)| Ok((s.t, frame_from_json(space, &s.frame, &format!("{location}[{k}].frame"))?)))
        .collect::<Result<Vec<_>>>()?;
    Path::new(pts).map_err(|e| e.at(location))
}

pub fn frame_to_json(frame: &LagrangianFrame) -> FrameJson {
    let m = frame.matrix();
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn unitary_to_json(u: &UnitaryMatrix) -> ComplexMatrixJson {
    let m = u.matrix();
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_to_json(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// A Lagrangian path together with its reference Lagrangian.
#[derive(Debug)]
pub struct LagrangianPathJob {
    pub space: Arc<SymplecticSpace>,
    pub lambda: LagrangianFrame,
    pub path: LagrangianPath,
}

pub fn parse_lagrangian_path(text: &str) -> Result<LagrangianPathJob> {
    let input: LagrangianPathInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    let space = Arc::new(SymplecticSpace::standard(input.n)?);
    let lambda = frame_from_json(&space, &input.lambda, "lambda")?;
    let path = frame_path(&space, &input.path, "path")?;
    Ok(LagrangianPathJob { space, lambda, path })
}

pub fn parse_unitary_path(text: &str) -> Result<UnitaryPath> {
    let input: UnitaryPathInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    let pts = input
        .path
        .iter()
        .enumerate()
        .map(|(k, s)| Ok((s.t, unitary_from_json(&s.u, input.n, &format!("path[{k}].U"))?)))
        .collect::<Result<Vec<_>>>()?;
    Path::new(pts).map_err(|e| e.at("path"))
}

pub fn parse_kashiwara(text: &str) -> Result<[LagrangianFrame; 3]> {
    let input: KashiwaraInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    if input.frames.len() != 3 {
        return Err(Error::invalid("exactly three frames are required", "frames"));
    }
    let space = Arc::new(SymplecticSpace::standard(input.n)?);
    let f = |k: usize| frame_from_json(&space, &input.frames[k], &format!("frames[{k}]"));
    Ok([f(0)?, f(1)?, f(2)?])
}

#[derive(Debug)]
pub struct ComplexKashiwaraJob {
    pub unitaries: [UnitaryMatrix; 3],
    pub lambda: LagrangianFrame,
}

pub fn parse_complex_kashiwara(text: &str) -> Result<ComplexKashiwaraJob> {
    let input: ComplexKashiwaraInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    if input.unitaries.len() != 3 {
        return Err(Error::invalid("exactly three unitaries are required", "unitaries"));
    }
    let space = Arc::new(SymplecticSpace::standard(input.n)?);
    let lambda = match &input.lambda {
        Some(f) => frame_from_json(&space, f, "lambda")?,
        None => space.horizontal(),
    };
    let u = |k: usize| unitary_from_json(&input.unitaries[k], input.n, &format!("unitaries[{k}]"));
    Ok(ComplexKashiwaraJob { unitaries: [u(0)?, u(1)?, u(2)?], lambda })
}

#[derive(Debug)]
pub struct LerayJob {
    pub first: LiftedUnitary,
    pub second: LiftedUnitary,
    pub probe: Option<LiftedUnitary>,
    pub lambda: LagrangianFrame,
}

pub fn parse_leray(text: &str) -> Result<LerayJob> {
    let input: LerayInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    let n = input.n;
    let space = Arc::new(SymplecticSpace::standard(n)?);
    let lambda = match &input.lambda {
        Some(f) => frame_from_json(&space, f, "lambda")?,
        None => space.horizontal(),
    };
    Ok(LerayJob {
        first: lifted_from_json(&input.first, n, "first")?,
        second: lifted_from_json(&input.second, n, "second")?,
        probe: input.probe.as_ref().map(|p| lifted_from_json(p, n, "probe")).transpose()?,
        lambda,
    })
}

#[derive(Debug)]
pub struct HormanderJob {
    pub ell0: LagrangianFrame,
    pub ell1: LagrangianFrame,
    pub lambda: LagrangianFrame,
    pub mu: LagrangianFrame,
    pub path: Option<LagrangianPath>,
}

pub fn parse_hormander(text: &str) -> Result<HormanderJob> {
    let input: HormanderInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    let space = Arc::new(SymplecticSpace::standard(input.n)?);
    Ok(HormanderJob {
        ell0: frame_from_json(&space, &input.ell0, "ell0")?,
        ell1: frame_from_json(&space, &input.ell1, "ell1")?,
        lambda: frame_from_json(&space, &input.lambda, "lambda")?,
        mu: frame_from_json(&space, &input.mu, "mu")?,
        path: input.path.as_ref().map(|p| frame_path(&space, p, "path")).transpose()?,
    })
}

#[derive(Debug)]
pub struct PairPathJob {
    pub space: Arc<SymplecticSpace>,
    pub mu: LagrangianPath,
    pub lambda: LagrangianPath,
}

pub fn parse_pair_path(text: &str) -> Result<PairPathJob> {
    let input: PairPathInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.n, "n")?;
    let space = Arc::new(SymplecticSpace::standard(input.n)?);
    let mut mu = Vec::with_capacity(input.path.len());
    let mut lambda = Vec::with_capacity(input.path.len());
    for (k, s) in input.path.iter().enumerate() {
        mu.push((s.t, frame_from_json(&space, &s.mu, &format!("path[{k}].mu"))?));
        lambda.push((s.t, frame_from_json(&space, &s.lambda, &format!("path[{k}].lambda"))?));
    }
    Ok(PairPathJob {
        space,
        mu: Path::new(mu).map_err(|e| e.at("path"))?,
        lambda: Path::new(lambda).map_err(|e| e.at("path"))?,
    })
}

#[derive(Debug)]
pub struct ReduceJob {
    pub pair: PolarizedPair,
    pub path: LagrangianPath,
}

pub fn parse_reduce(text: &str) -> Result<ReduceJob> {
    let input: ReduceInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.polarized.n_B, "polarized.n_B")?;
    check_n(input.polarized.n_H, "polarized.n_H")?;
    let pair = PolarizedPair::from_spec(&input.polarized).map_err(|e| e.at("polarized"))?;
    let path = frame_path(pair.lambda_plus().space(), &input.path, "path")?;
    Ok(ReduceJob { pair, path })
}

#[derive(Debug)]
pub struct BoundaryProblemJob {
    pub problem: BoundaryProblem,
    pub window: Option<f64>,
}

pub fn parse_boundary_problem(text: &str) -> Result<BoundaryProblemJob> {
    let input: BoundaryProblemInput = parse_json(text)?;
    check_version(input.version)?;
    check_n(input.N, "N")?;
    let n = input.N;
    let b = real_matrix(&input.B, 2 * n, 2 * n, "B")?;
    let family = input
        .family
        .iter()
        .enumerate()
        .map(|(k, s)| Ok((s.t, real_matrix(&s.c, 2 * n, 2 * n, &format!("family[{k}].C"))?)))
        .collect::<Result<Vec<_>>>()?;
    let space = Arc::new(SymplecticSpace::standard(n)?);
    let lambda0 = frame_from_json(&space, &input.lambda0, "lambda0")?;
    let lambda1 = frame_from_json(&space, &input.lambda1, "lambda1")?;
    if let Some(w) = input.window {
        if !(w.is_finite() && w > 0.0) {
            return Err(Error::invalid("window must be positive", "window"));
        }
    }
    Ok(BoundaryProblemJob { problem: BoundaryProblem::new(b, family, lambda0, lambda1)?, window: input.window })
}

/// Writes every float with 17 significant digits.
#[derive(Debug, Clone, Copy, Default)]
pub struct SigFormatter;

impl serde_json::ser::Formatter for SigFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        if value.is_finite() {
            write!(writer, "{}", fmt_f64(value))
        } else {
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Compact JSON with 17-significant-digit floats.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigFormatter);
    value.serialize(&mut ser).expect("serializing to memory cannot fail");
    String::from_utf8(out).expect("JSON is UTF-8")
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).flexible(false).from_writer(w)
}

/// Columns `t, phase_1..phase_n` of matched trajectories.
pub fn write_eigenphase_trace<W: Write>(trace: &EigenphaseTrace, w: W) -> Result<()> {
    let n = trace.phases.first().map(|r| r.len()).unwrap_or(0);
    let mut wr = csv_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("phase_{k}")));
    let io = |e: csv::Error| Error::precondition(e.to_string(), "trace");
    wr.write_record(&header).map_err(io)?;
    for (t, row) in trace.times.iter().zip(&trace.phases) {
        let mut rec = vec![fmt_f64(*t)];
        rec.extend(row.iter().map(|p| fmt_f64(*p)));
        wr.write_record(&rec).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::precondition(e.to_string(), "trace"))
}

/// Columns `t, s_1..s_m`; rows with fewer eigenvalues are padded with empty fields.
pub fn write_eigenvalue_trace<W: Write>(trace: &EigenvalueTrace, w: W) -> Result<()> {
    let m = trace.eigenvalues.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut wr = csv_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=m).map(|k| format!("s_{k}")));
    let io = |e: csv::Error| Error::precondition(e.to_string(), "trace");
    wr.write_record(&header).map_err(io)?;
    for (t, row) in trace.times.iter().zip(&trace.eigenvalues) {
        let mut rec = vec![fmt_f64(*t)];
        rec.extend(row.iter().map(|s| fmt_f64(*s)));
        rec.resize(m + 1, String::new());
        wr.write_record(&rec).map_err(io)?;
    }
    wr.flush().map_err(|e| Error::precondition(e.to_string(), "trace"))
}
