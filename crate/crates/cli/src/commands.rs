use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use spectrex::models::ModelDescriptor;
use spectrex::povm_measure::{self, GridProblem, SplitOutcome};
use spectrex::reproduce;
use spectrex::{decompose_extreme, AlgebraElement, Error, Spectrahedron, Tolerances, Verdict};

use crate::Format;

pub const EXIT_EXTREME: u8 = 0;
pub const EXIT_NOT_EXTREME: u8 = 1;
pub const EXIT_NOT_MEMBER: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;
pub const EXIT_INPUT: u8 = 4;

#[derive(Clone, Copy, Debug)]
pub enum Task {
    Check,
    Bounds,
    Decompose { max_components: usize },
    PovmSplit,
}

impl Task {
    fn name(&self) -> &'static str {
        match self {
            Task::Check => "check",
            Task::Bounds => "bounds",
            Task::Decompose { .. } => "decompose",
            Task::PovmSplit => "povm-split",
        }
    }
}

pub struct Job {
    pub task: Task,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub tolerance_ker: Option<f64>,
    pub tolerance_psd: Option<f64>,
    pub format: Format,
}

fn verdict_code(v: Verdict) -> u8 {
    match v {
        Verdict::Extreme => EXIT_EXTREME,
        Verdict::NotExtreme => EXIT_NOT_EXTREME,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::NotMember { .. } => EXIT_NOT_MEMBER,
        Error::InconclusiveExtremality
        | Error::DegenerateNullspace { .. }
        | Error::ComponentBudgetExceeded { .. }
        | Error::UnboundedFace => EXIT_INCONCLUSIVE,
        _ => EXIT_INPUT,
    }
}

/// Outcome of one input: exit code, JSON body and a one-line summary.
struct Outcome {
    code: u8,
    body: Value,
    summary: String,
}

impl Outcome {
    fn failed(e: &Error) -> Self {
        Outcome { code: error_code(e), body: json!({ "error": e.to_string() }), summary: format!("error: {e}") }
    }
}

fn tolerances(job: &Job) -> Result<Tolerances, String> {
    let mut tol = Tolerances::default();
    for (name, value, slot) in [
        ("--tolerance-ker", job.tolerance_ker, &mut tol.ker),
        ("--tolerance-psd", job.tolerance_psd, &mut tol.psd),
    ] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} must be a positive number, got {v}"));
            }
            *slot = v;
        }
    }
    Ok(tol)
}

fn parse_json(text: &str) -> Result<Value, Error> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))
}

/// `{"spectrahedron": descriptor, "point": element}`.
fn parse_point(v: &Value) -> Result<(ModelDescriptor, Spectrahedron, AlgebraElement), Error> {
    let desc = v
        .get("spectrahedron")
        .ok_or_else(|| Error::Parse("missing field \"spectrahedron\"".into()))?;
    let desc = ModelDescriptor::from_json(desc.get("model_descriptor").unwrap_or(desc)).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("spectrahedron: {m}")),
        other => other,
    })?;
    let s = desc.build()?;
    let point = v.get("point").ok_or_else(|| Error::Parse("missing field \"point\"".into()))?;
    let a = AlgebraElement::from_json(s.spec(), point).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("point: {m}")),
        other => other,
    })?;
    Ok((desc, s, a))
}

fn check(v: &Value, tol: &Tolerances) -> Result<Outcome, Error> {
    let (desc, s, a) = parse_point(v)?;
    let m = s.membership(&a, tol)?;
    if !m.member {
        return Ok(Outcome {
            code: EXIT_NOT_MEMBER,
            summary: format!(
                "NotMember (worst residual {:.3e}, minimum eigenvalue {:.3e})",
                m.worst_residual(),
                m.min_eigenvalue
            ),
            body: json!({ "verdict": "NotMember", "membership": m }),
        });
    }
    let rep = s.is_extreme(&a, tol)?;
    let closed = match desc.closed_form_test(&a, tol) {
        None => Value::Null,
        Some(Ok(v)) => json!(v),
        Some(Err(e)) => json!({ "error": e.to_string() }),
    };
    let mut body = rep.to_json();
    body["membership"] = json!(m);
    body["closed_form"] = closed;
    Ok(Outcome {
        code: verdict_code(rep.verdict),
        summary: format!(
            "{:?} (kernel_dim {}, dim_VA {}, ranks {:?})",
            rep.verdict, rep.kernel_dim, rep.dim_va, rep.ranks
        ),
        body,
    })
}

fn bounds(v: &Value, tol: &Tolerances) -> Result<Outcome, Error> {
    let (_, s, a) = parse_point(v)?;
    let m = s.membership(&a, tol)?;
    if !m.member {
        return Err(Error::NotMember { residual: m.worst_residual(), min_eigenvalue: m.min_eigenvalue });
    }
    let audit = s.rank_bounds(&a, tol)?;
    let ok = audit.all_satisfied();
    Ok(Outcome {
        // A violated bound certifies that the point is not extreme.
        code: if ok { EXIT_EXTREME } else { EXIT_NOT_EXTREME },
        summary: format!(
            "bounds {} (dim_VA {}, rank sum {} <= {})",
            if ok { "hold" } else { "violated" },
            audit.dim.dim_va,
            audit.rank_sum.lhs,
            audit.rank_sum.rhs
        ),
        body: json!({ "all_satisfied": ok, "bounds": audit, "membership": m }),
    })
}

fn decompose(v: &Value, tol: &Tolerances, max_components: usize) -> Result<Outcome, Error> {
    let (_, s, a) = parse_point(v)?;
    let dec = decompose_extreme(&s, &a, max_components, tol)?;
    let mut body = dec.to_json();
    let verdicts: Vec<Verdict> = dec.components.iter().map(|c| c.report.verdict).collect();
    for (c, v) in body["components"].as_array_mut().expect("component list").iter_mut().zip(&verdicts) {
        c["verdict"] = json!(v);
    }
    let code = if verdicts.iter().all(|&v| v == Verdict::Extreme) { EXIT_EXTREME } else { EXIT_INCONCLUSIVE };
    Ok(Outcome {
        code,
        summary: format!(
            "{} components, reconstruction error {:.3e}, depth {}",
            dec.components.len(),
            dec.reconstruction_error,
            dec.tree_depth
        ),
        body,
    })
}

fn povm_split(v: &Value, tol: &Tolerances) -> Result<Outcome, Error> {
    let pr = GridProblem::from_json(v, tol)?;
    Ok(match povm_measure::split_if_oversupported(&pr, tol)? {
        SplitOutcome::Split(w) => Outcome {
            code: EXIT_NOT_EXTREME,
            summary: format!(
                "split: support {} > {}, orthogonality residual {:.3e}",
                pr.povm.support(tol).len(),
                pr.povm.dimension_bound(),
                w.orthogonality_residual
            ),
            body: json!({ "outcome": "split", "witness": w.to_json() }),
        },
        SplitOutcome::Compact(c) => Outcome {
            code: verdict_code(c.report.verdict),
            summary: format!("compact: {} outcomes, {:?}", c.labels.len(), c.report.verdict),
            body: json!({ "outcome": "compact", "povm": c.to_json() }),
        },
    })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn run_one(task: Task, path: &Path, tol: &Tolerances) -> (Option<String>, Outcome) {
    let bytes = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) => return (None, Outcome::failed(&Error::Parse(format!("cannot read {}: {e}", path.display())))),
    };
    let hash = sha256_hex(&bytes);
    let result = std::str::from_utf8(&bytes)
        .map_err(|e| Error::Parse(format!("input is not UTF-8: {e}")))
        .and_then(parse_json)
        .and_then(|v| match task {
            Task::Check => check(&v, tol),
            Task::Bounds => bounds(&v, tol),
            Task::Decompose { max_components } => decompose(&v, tol, max_components),
            Task::PovmSplit => povm_split(&v, tol),
        });
    (Some(hash), result.unwrap_or_else(|e| Outcome::failed(&e)))
}

fn emit(output: Option<&Path>, text: &str) -> u8 {
    match output {
        Some(p) => match std::fs::write(p, text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("spectrex: cannot write {}: {e}", p.display());
                EXIT_INPUT
            }
        },
        None => {
            print!("{text}");
            0
        }
    }
}

/// Runs a job over every input; the exit code is the largest per-input code.
pub fn run_job(job: Job) -> u8 {
    let tol = match tolerances(&job) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("spectrex: {msg}");
            return EXIT_INPUT;
        }
    };
    let mut code = 0;
    let mut results = Vec::with_capacity(job.inputs.len());
    let mut text = String::new();
    for path in &job.inputs {
        let (hash, out) = run_one(job.task, path, &tol);
        code = code.max(out.code);
        let _ = writeln!(text, "{}: exit {} {}", path.display(), out.code, out.summary);
        let mut entry = json!({
            "input": path.display().to_string(),
            "sha256": hash,
            "exit_code": out.code,
        });
        if let (Value::Object(e), Value::Object(b)) = (&mut entry, out.body) {
            e.extend(b);
        }
        results.push(entry);
    }
    let rendered = match job.format {
        Format::Json => {
            let report = json!({
                "tool": "spectrex",
                "version": env!("CARGO_PKG_VERSION"),
                "command": job.task.name(),
                "tolerances": tol,
                "exit_code": code,
                "results": results,
            });
            serde_json::to_string_pretty(&report).expect("reports serialise") + "\n"
        }
        Format::Text => {
            let header = format!("spectrex {} {}\n", env!("CARGO_PKG_VERSION"), job.task.name());
            header + &text
        }
    };
    code.max(emit(job.output.as_deref(), &rendered))
}

pub fn run_reproduce(seed: u64, only: &[String], output: Option<PathBuf>, format: Format) -> u8 {
    let ids = match reproduce::select(only) {
        Ok(ids) => ids,
        Err(e) => {
            eprintln!("spectrex: {e}");
            return EXIT_INPUT;
        }
    };
    let report = reproduce::run_reproduce(seed, &ids);
    let rendered = match format {
        Format::Json => serde_json::to_string_pretty(&report.to_json()).expect("reports serialise") + "\n",
        Format::Text => report.to_text(),
    };
    let code = if report.all_passed() { 0 } else { 1 };
    code.max(emit(output.as_deref(), &rendered))
}
