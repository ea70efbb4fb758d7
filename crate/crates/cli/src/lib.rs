//! Job runner behind the `betti-lab` binary.
//!
//! A job names a subcommand and carries its parameters; [`run`] executes it
//! and returns the JSON document, an optional CSV table and the exit status.

pub mod cache;
mod commands;
pub mod inputs;
pub mod output;
pub mod verify;

use std::path::{Path, PathBuf};

use betti_core::Precision;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

pub use cache::DiskCache;
pub use output::{to_json, SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Periods,
    Betti,
    Jacobian,
    RankScan,
    Pell,
    PellFamily,
    Ks,
    Webs,
    Census,
    TorsionSolve,
    Verify,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Periods => "periods",
            Subcommand::Betti => "betti",
            Subcommand::Jacobian => "jacobian",
            Subcommand::RankScan => "rank-scan",
            Subcommand::Pell => "pell",
            Subcommand::PellFamily => "pell-family",
            Subcommand::Ks => "ks",
            Subcommand::Webs => "webs",
            Subcommand::Census => "census",
            Subcommand::TorsionSolve => "torsion-solve",
            Subcommand::Verify => "verify",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error(transparent)]
    Core(#[from] betti_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Schema(_) => "SchemaError",
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "IoError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) | CliError::Io(_) => 2,
            CliError::Core(_) => 1,
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Schema(e.to_string())
    }
}

/// A parsed job file.  Parameters may sit under `params` or at top level.
#[derive(Clone, Debug, PartialEq)]
pub struct Job {
    pub subcommand: Subcommand,
    pub params: Value,
    pub seed: Option<u64>,
    pub precision: Option<Precision>,
    pub output_path: Option<PathBuf>,
}

#[derive(Deserialize)]
struct RawJob {
    subcommand: Subcommand,
    #[serde(default)]
    params: Option<Map<String, Value>>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    precision: Option<Precision>,
    #[serde(default)]
    output_path: Option<PathBuf>,
    #[serde(flatten)]
    rest: Map<String, Value>,
}

impl Job {
    pub fn new(subcommand: Subcommand, params: Value) -> Self {
        Job { subcommand, params, seed: None, precision: None, output_path: None }
    }

    pub fn from_json(text: &str) -> Result<Job, CliError> {
        let raw: RawJob = serde_json::from_str(text)?;
        let mut params = raw.params.unwrap_or_default();
        for (k, v) in raw.rest {
            if params.insert(k.clone(), v).is_some() {
                return Err(CliError::Schema(format!("parameter {k:?} given twice")));
            }
        }
        Ok(Job { subcommand: raw.subcommand, params: Value::Object(params), seed: raw.seed, precision: raw.precision, output_path: raw.output_path })
    }
}

/// Command-line overrides.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub precision: Option<Precision>,
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub json: String,
    pub csv: Option<String>,
    /// Human-readable table printed by `verify`.
    pub table: Option<String>,
}

pub(crate) struct Produced {
    pub result: Value,
    pub csv: Option<String>,
    pub table: Option<String>,
    pub failed: bool,
}

impl Produced {
    pub fn json(result: Value) -> Self {
        Produced { result, csv: None, table: None, failed: false }
    }
}

pub(crate) struct Ctx {
    pub seed: u64,
    pub precision: Precision,
    pub cache: DiskCache,
}

pub fn output_dir(job: &Job, opts: &RunOptions) -> Option<PathBuf> {
    opts.out.clone().or_else(|| job.output_path.clone())
}

/// Execute a job; never panics on bad input.
pub fn run(job: &Job, opts: &RunOptions) -> Outcome {
    let seed = opts.seed.or(job.seed).unwrap_or(0);
    let precision = opts.precision.or(job.precision).unwrap_or_default();
    let out = output_dir(job, opts);
    let ctx = Ctx { seed, precision, cache: DiskCache::new(out.as_deref().map(|d| d.join("cache")).as_deref()) };
    let mut doc = Map::new();
    doc.insert("schema".into(), json!(SCHEMA));
    doc.insert("subcommand".into(), json!(job.subcommand.name()));
    doc.insert("seed".into(), json!(seed));
    doc.insert("precision".into(), serde_json::to_value(precision).expect("enum serializes"));
    let (exit_code, csv, table) = match commands::dispatch(job, &ctx) {
        Ok(p) => {
            doc.insert("status".into(), json!(if p.failed { "invariant-failure" } else { "ok" }));
            doc.insert("result".into(), p.result);
            (if p.failed { 1 } else { 0 }, p.csv, p.table)
        }
        Err(e) => {
            doc.insert("status".into(), json!("error"));
            doc.insert("error".into(), json!({"code": e.code(), "message": e.to_string()}));
            (e.exit_code(), None, None)
        }
    };
    Outcome { exit_code, json: to_json(&Value::Object(doc)), csv, table }
}

/// Error document for failures before a job could be parsed.
pub fn error_outcome(err: &CliError) -> Outcome {
    let doc = json!({
        "schema": SCHEMA,
        "status": "error",
        "error": {"code": err.code(), "message": err.to_string()},
    });
    Outcome { exit_code: err.exit_code(), json: to_json(&doc), csv: None, table: None }
}

/// Write `<dir>/<subcommand>.json` and, if present, the CSV table.
pub fn write_artifacts(dir: &Path, job: &Job, outcome: &Outcome) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let name = job.subcommand.name();
    std::fs::write(dir.join(format!("{name}.json")), &outcome.json)?;
    if let Some(csv) = &outcome.csv {
        std::fs::write(dir.join(format!("{name}.csv")), csv)?;
    }
    Ok(())
}
