//! Job runner behind the `maslov` binary: reads a JSON problem, dispatches to
//! `maslov-core` and renders the report. `main.rs` only parses arguments.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use maslov::crossing::{all_crossings, endpoint_contribution, interpolated};
use maslov::indices::{self, LiftedUnitary};
use maslov::io::{self, LiftedJson};
use maslov::maslov::{maslov_with, unitary_maslov_with, EigenphaseTrace, IndexReport};
use maslov::reduction::{pair_path, BoxSpace};
use maslov::spectral::{self, DEFAULT_WINDOW};
use maslov::{Error, ErrorKind, Result, SignatureResult, Tolerances};
use serde_json::{json, Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Maslov,
    UnitaryMaslov,
    Crossings,
    Kashiwara,
    ComplexKashiwara,
    Leray,
    Hormander,
    PairMaslov,
    Reduce,
    SpectralFlow,
    VerifyCoincidence,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Maslov => "maslov",
            Command::UnitaryMaslov => "unitary-maslov",
            Command::Crossings => "crossings",
            Command::Kashiwara => "kashiwara",
            Command::ComplexKashiwara => "complex-kashiwara",
            Command::Leray => "leray",
            Command::Hormander => "hormander",
            Command::PairMaslov => "pair-maslov",
            Command::Reduce => "reduce",
            Command::SpectralFlow => "spectral-flow",
            Command::VerifyCoincidence => "verify-coincidence",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    Strict,
    #[default]
    Default,
    Loose,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Strict => "strict",
            Profile::Default => "default",
            Profile::Loose => "loose",
        }
    }

    pub fn factor(self) -> f64 {
        match self {
            Profile::Strict => 0.1,
            Profile::Default => 1.0,
            Profile::Loose => 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct JobSpec {
    pub command: Command,
    pub input: PathBuf,
    pub profile: Profile,
    pub seed: u64,
    /// Divides the sample-step bounds, so paths are refined more densely.
    pub refine_factor: f64,
    pub trace: Option<PathBuf>,
}

impl JobSpec {
    pub fn new(command: Command, input: impl Into<PathBuf>) -> Self {
        JobSpec { command, input: input.into(), profile: Profile::Default, seed: 0, refine_factor: 1.0, trace: None }
    }

    fn tolerances(&self) -> Tolerances {
        let mut tol = Tolerances::scaled(self.profile.factor());
        tol.unitary_step /= self.refine_factor;
        tol.frame_step /= self.refine_factor;
        tol
    }
}

/// Exit status and the JSON text for standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub report: String,
}

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Validation => 2,
        ErrorKind::Ambiguity => 3,
        ErrorKind::Precondition => 4,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Validation => "validation",
        ErrorKind::Ambiguity => "ambiguity",
        ErrorKind::Precondition => "precondition",
    }
}

enum Trace {
    Phases(EigenphaseTrace),
    Eigenvalues(spectral::EigenvalueTrace),
}

struct Computed {
    fields: Map<String, Value>,
    diagnostics: Map<String, Value>,
    trace: Option<Trace>,
    /// Set when the job ran but its answer is undecided.
    failure: Option<Error>,
}

impl Computed {
    fn new() -> Self {
        Computed { fields: Map::new(), diagnostics: Map::new(), trace: None, failure: None }
    }

    fn set(&mut self, key: &str, v: Value) {
        self.fields.insert(key.into(), v);
    }

    fn diag(&mut self, key: &str, v: Value) {
        self.diagnostics.insert(key.into(), v);
    }

    fn index(&mut self, r: IndexReport) {
        self.set("value", json!(r.value));
        self.diag("intervals", json!(r.intervals.len()));
        let eps = r.epsilons();
        if !eps.is_empty() {
            self.diag("min_epsilon", json!(eps.iter().copied().fold(f64::INFINITY, f64::min)));
        }
        self.trace = Some(Trace::Phases(r.trace));
    }

    fn signature(&mut self, s: &SignatureResult) {
        self.set("value", json!(s.signature()));
        self.set("nulls", json!(s.nulls));
        self.diag("positives", json!(s.positives));
        self.diag("negatives", json!(s.negatives));
    }
}

pub fn run(spec: &JobSpec) -> Outcome {
    let mut head = Map::new();
    head.insert("command".into(), json!(spec.command.name()));
    head.insert("version".into(), json!(VERSION));
    head.insert("seed".into(), json!(spec.seed));
    head.insert("tolerance_profile".into(), json!(spec.profile.name()));

    let result = compute(spec).and_then(|c| {
        if let (Some(trace), Some(path)) = (&c.trace, &spec.trace) {
            write_trace(trace, path)?;
        } else if spec.trace.is_some() {
            return Err(Error::invalid(format!("{} produces no trace", spec.command.name()), "--trace"));
        }
        Ok(c)
    });
    match result {
        Ok(c) => {
            let code = c.failure.as_ref().map_or(0, |e| exit_code(e.kind()));
            head.extend(c.fields);
            if let Some(e) = &c.failure {
                head.insert("status".into(), json!(kind_name(e.kind())));
                head.insert("reason".into(), json!(e.reason()));
                head.insert("location".into(), json!(e.location()));
            }
            head.insert("diagnostics".into(), Value::Object(c.diagnostics));
            Outcome { code, report: io::to_json(&head) }
        }
        Err(e) => {
            head.insert("status".into(), json!(kind_name(e.kind())));
            head.insert("reason".into(), json!(e.reason()));
            head.insert("location".into(), json!(e.location()));
            Outcome { code: exit_code(e.kind()), report: io::to_json(&head) }
        }
    }
}

fn write_trace(trace: &Trace, path: &PathBuf) -> Result<()> {
    let loc = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::invalid(format!("cannot write trace: {e}"), loc.clone()))?;
    let w = BufWriter::new(file);
    match trace {
        Trace::Phases(t) => io::write_eigenphase_trace(t, w),
        Trace::Eigenvalues(t) => io::write_eigenvalue_trace(t, w),
    }
    .map_err(|e| Error::invalid(e.reason(), loc))
}

fn lifted_json(l: &LiftedUnitary) -> LiftedJson {
    LiftedJson { u: io::unitary_to_json(l.unitary()), alpha: l.alpha() }
}

fn compute(spec: &JobSpec) -> Result<Computed> {
    let text = std::fs::read_to_string(&spec.input)
        .map_err(|e| Error::invalid(format!("cannot read input: {e}"), spec.input.display().to_string()))?;
    let tol = spec.tolerances();
    let mut out = Computed::new();
    match spec.command {
        Command::Maslov => {
            let job = io::parse_lagrangian_path(&text)?;
            out.index(maslov_with(&job.path, &job.lambda, &tol)?);
        }
        Command::UnitaryMaslov => {
            let path = io::parse_unitary_path(&text)?;
            out.index(unitary_maslov_with(&path, &tol, tol.unitary_step)?);
        }
        Command::Crossings => {
            let job = io::parse_lagrangian_path(&text)?;
            let crossings = all_crossings(&job.path, &job.lambda, &tol)?;
            let list: Vec<Value> = crossings
                .iter()
                .map(|c| {
                    json!({"t": c.t_star, "dim": c.dim(), "positives": c.signature.positives,
                        "negatives": c.signature.negatives, "nulls": c.signature.nulls, "regular": c.regular})
                })
                .collect();
            out.set("crossings", Value::Array(list));
            match crossings.iter().find(|c| !c.regular) {
                Some(c) => {
                    out.set("value", Value::Null);
                    out.failure = Some(Error::ambiguous("non-regular crossing", format!("t={}", c.t_star)));
                }
                None => out.set("value", json!(crossings.iter().map(endpoint_contribution).sum::<i64>())),
            }
            out.diag("interpolated_samples", json!(interpolated(&job.path)?.samples().len()));
        }
        Command::Kashiwara => {
            let [a, b, c] = io::parse_kashiwara(&text)?;
            out.signature(&indices::kashiwara(&a, &b, &c)?);
        }
        Command::ComplexKashiwara => {
            let job = io::parse_complex_kashiwara(&text)?;
            let [u1, u2, u3] = &job.unitaries;
            out.signature(&indices::complex_kashiwara(u1, u2, u3, &job.lambda)?);
        }
        Command::Leray => {
            let job = io::parse_leray(&text)?;
            // a given probe forces the general formula
            let direct = if job.probe.is_some() {
                None
            } else {
                match indices::leray_with(&job.first, &job.second, &tol) {
                    Ok(v) => Some(v),
                    Err(e) if e.kind() == ErrorKind::Precondition => None,
                    Err(e) => return Err(e),
                }
            };
            match direct {
                Some(v) => {
                    out.set("value", json!(v));
                    out.diag("method", json!("transversal"));
                }
                None => {
                    let (v, probe) =
                        indices::leray_general(&job.first, &job.second, job.probe.as_ref(), &job.lambda, spec.seed)?;
                    out.set("value", json!(v));
                    out.set("probe", serde_json::to_value(lifted_json(&probe)).expect("serializable"));
                    out.set("probe_seed", json!(spec.seed));
                    out.diag("method", json!("probe"));
                }
            }
        }
        Command::Hormander => {
            let job = io::parse_hormander(&text)?;
            let v = indices::hormander_with(&job.ell0, &job.ell1, &job.lambda, &job.mu, job.path.as_ref(), &tol)?;
            out.set("value", json!(v));
            out.diag("path", json!(if job.path.is_some() { "given" } else { "synthesized" }));
        }
        Command::PairMaslov => {
            let job = io::parse_pair_path(&text)?;
            let boxed = BoxSpace::new(&job.space)?;
            let paired = pair_path(&boxed, &job.mu, &job.lambda)?;
            out.index(maslov_with(&paired, boxed.diagonal(), &tol)?);
        }
        Command::Reduce => {
            let job = io::parse_reduce(&text)?;
            let reduced = job.pair.reduce_path(&job.path)?;
            let original = maslov_with(&job.path, job.pair.lambda_minus(), &tol)?.value;
            out.index(job.pair.reduced_maslov(&job.path, &tol)?);
            let value = out.fields["value"].as_i64();
            out.set("original", json!(original));
            out.set("equal", json!(value == Some(original)));
            out.set(
                "reduced_endpoints",
                json!([io::frame_to_json(reduced.start()), io::frame_to_json(reduced.end())]),
            );
            out.diag("compatibility_residual", json!(job.pair.compatibility_residual()));
        }
        Command::SpectralFlow => {
            let job = io::parse_boundary_problem(&text)?;
            let window = job.window.unwrap_or(DEFAULT_WINDOW);
            let r = spectral::spectral_flow(&job.problem, window)?;
            out.set("value", json!(r.value));
            out.diag("intervals", json!(r.intervals.len()));
            out.diag("window", json!(window));
            if spec.trace.is_some() {
                out.trace = Some(Trace::Eigenvalues(spectral::eigenvalue_trace(&job.problem, window)?));
            }
        }
        Command::VerifyCoincidence => {
            let job = io::parse_boundary_problem(&text)?;
            let window = job.window.unwrap_or(DEFAULT_WINDOW);
            let r = spectral::verify_coincidence(&job.problem, window)?;
            out.set("sf", json!(r.sf));
            out.set("mas", json!(r.mas));
            out.set("equal", json!(r.equal));
            out.diag("window", json!(window));
            if let Some(e) = &r.sf_error {
                out.diag("sf_error", json!(e));
            }
            if let Some(e) = &r.mas_error {
                out.diag("mas_error", json!(e));
            }
            if r.equal.is_none() {
                let side = if r.sf.is_none() { "sf" } else { "mas" };
                out.failure = Some(Error::ambiguous("one side of the comparison is undecided", side));
            }
            if spec.trace.is_some() {
                out.trace = Some(Trace::Eigenvalues(spectral::eigenvalue_trace(&job.problem, window)?));
            }
        }
    }
    Ok(out)
}
