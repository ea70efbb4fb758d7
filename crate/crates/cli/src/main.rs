use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use betti_lab::{error_outcome, output_dir, run, write_artifacts, CliError, Job, RunOptions, Subcommand};
use betti_core::Precision;
use clap::Parser;

/// Batch runner for period, Betti-map, Pell and related computations.
#[derive(Parser, Debug)]
#[command(name = "betti-lab", version)]
struct Args {
    /// Job file (JSON).
    #[arg(long)]
    job: Option<PathBuf>,
    /// Subcommand to run without a job file.
    #[arg(value_enum)]
    subcommand: Option<Subcommand>,
    /// Parameters for SUBCOMMAND as inline JSON.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = parse_precision)]
    precision: Option<Precision>,
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for JSON/CSV artifacts and the period cache.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_precision(s: &str) -> Result<Precision, String> {
    match s {
        "double" => Ok(Precision::Double),
        "dd" => Ok(Precision::Dd),
        _ => Err(format!("unknown precision {s:?} (double|dd)")),
    }
}

fn load_job(args: &Args) -> anyhow::Result<Job> {
    match (&args.job, args.subcommand) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(Job::from_json(&text)?)
        }
        (None, Some(sub)) => {
            let params = match &args.params {
                Some(p) => serde_json::from_str(p).context("parsing --params")?,
                None => serde_json::json!({}),
            };
            Ok(Job::new(sub, params))
        }
        _ => anyhow::bail!("give either --job <file> or a subcommand"),
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let job = match load_job(&args) {
        Ok(j) => j,
        Err(e) => {
            let err = match e.downcast::<CliError>() {
                Ok(c) => c,
                Err(other) => CliError::Schema(format!("{other:#}")),
            };
            print!("{}", error_outcome(&err).json);
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    let opts = RunOptions { seed: args.seed, precision: args.precision, out: args.out.clone() };
    let outcome = run(&job, &opts);
    if let Some(t) = &outcome.table {
        print!("{t}");
    } else {
        print!("{}", outcome.json);
    }
    if let Some(dir) = output_dir(&job, &opts) {
        if let Err(e) = write_artifacts(&dir, &job, &outcome) {
            eprintln!("error: writing artifacts: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
