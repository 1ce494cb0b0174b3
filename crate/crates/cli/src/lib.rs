//! Batch experiment runner: reads a JSON config, runs one command and
//! writes a CSV table plus a JSON summary.
//!
//! Exit status is 0 when every check passes, 1 when a check fails or the
//! computation breaks down, and 2 for usage or config errors.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde_json::json;

pub use config::ExperimentConfig;
use output::{write_atomic, Check, Summary, SCHEMA_VERSION};

/// Environment variable that overrides the default output directory.
pub const OUT_DIR_ENV: &str = "LINMED_OUT_DIR";
/// Output directory used when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT_DIR: &str = "out";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(linmed_core::Error),
}

impl From<linmed_core::Error> for CliError {
    fn from(e: linmed_core::Error) -> Self {
        match e {
            linmed_core::Error::InvalidArgument(m) => CliError::Usage(m),
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "linmed", version, about = "Run a linmed experiment from a JSON config")]
pub struct Args {
    /// Experiment config (JSON).
    pub config: PathBuf,
    /// Output directory (overrides LINMED_OUT_DIR).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for Monte Carlo commands (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// Where and how to run.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    /// Paths of the CSV and JSON artifacts, in write order.
    pub artifacts: Vec<PathBuf>,
    pub timings_path: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.summary.passed {
            0
        } else {
            1
        }
    }
}

fn resolve_out_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

/// Run a parsed config and write its artifacts.
pub fn run_config(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let out_dir = resolve_out_dir(opts.out_dir.as_deref());
    let seed = opts.seed.or(cfg.seed);
    let stem = cfg.stem();
    let start = Instant::now();
    let (tables, checks, results) = match commands::dispatch(&cfg.command, &cfg.base_dir, seed) {
        Ok(o) => (o.tables, o.checks, o.results),
        Err(CliError::Core(e)) => (Vec::new(), vec![Check::flag("run", false, e.to_string())], json!({})),
        Err(e) => return Err(e),
    };
    let elapsed = start.elapsed().as_secs_f64();

    let mut artifacts = Vec::new();
    let mut names = Vec::new();
    for (suffix, table) in &tables {
        let name = format!("{stem}{suffix}.csv");
        let path = out_dir.join(&name);
        write_atomic(&path, &table.to_bytes()?)?;
        artifacts.push(path);
        names.push(name);
    }
    let failed_checks: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let summary = Summary {
        schema: SCHEMA_VERSION,
        command: cfg.command.name().to_string(),
        description: cfg.description.clone(),
        seed,
        passed: failed_checks.is_empty(),
        failed_checks,
        checks,
        results,
        artifacts: names,
    };
    let json_path = out_dir.join(format!("{stem}.json"));
    write_atomic(&json_path, &summary.to_bytes()?)?;
    artifacts.push(json_path);

    let timings_path = out_dir.join(format!("{stem}.timings.json"));
    let timings = json!({ "command": cfg.command.name(), "elapsed_seconds": elapsed });
    let mut bytes = serde_json::to_vec_pretty(&timings).map_err(|e| CliError::Io(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(&timings_path, &bytes)?;
    Ok(RunOutcome { summary, artifacts, timings_path })
}

/// Load a config file and run it.
pub fn run_path(path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    run_config(&ExperimentConfig::from_path(path)?, opts)
}

/// Entry point shared by the binary; returns the process exit status.
pub fn main_with_args(args: Args) -> i32 {
    if let Some(k) = args.jobs {
        if k == 0 {
            eprintln!("usage error: --jobs must be positive");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }
    let opts = RunOptions { out_dir: args.out, seed: args.seed };
    match run_path(&args.config, &opts) {
        Ok(o) => {
            let s = &o.summary;
            for c in &s.checks {
                println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
            }
            for a in &o.artifacts {
                println!("wrote {}", a.display());
            }
            o.exit_code()
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
