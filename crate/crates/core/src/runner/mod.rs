//! Named experiments behind the command-line binary.
//!
//! A run is fully determined by its resolved [`ExperimentConfig`]: parallel
//! work is gathered in input order, and no wall-clock data reaches the outputs.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;

use serde_json::json;

pub use config::{validate, Diagnostic, Experiment, ExperimentConfig, FileConfig, Overrides};
pub use experiments::{execute, RunOutput};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Outcome of [`run`], mapped onto a process exit code.
#[derive(Debug)]
pub enum RunStatus {
    Ok,
    Invalid(Vec<Diagnostic>),
    Numerical(Error),
    Io(std::io::Error),
}

impl RunStatus {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunStatus::Ok => EXIT_OK,
            RunStatus::Invalid(_) => EXIT_CONFIG,
            RunStatus::Numerical(_) | RunStatus::Io(_) => EXIT_NUMERICAL,
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Truncation { .. } => "truncation",
        Error::DimensionTooSmall { .. } => "dimension_too_small",
        Error::DegenerateAncilla { .. } => "degenerate_ancilla",
        Error::IndexOutOfRange { .. } => "index_out_of_range",
        Error::NoConvergence { .. } => "no_convergence",
        Error::InvalidArgument(_) => "invalid_argument",
    }
}

fn write_error(dir: &Path, e: &Error) -> std::io::Result<()> {
    output::write_json(
        dir,
        "error.json",
        &json!({ "kind": error_kind(e), "message": e.to_string(), "exit_code": EXIT_NUMERICAL }),
    )
}

/// Validates, runs and writes every output file into `cfg.out`.
pub fn run(cfg: &ExperimentConfig) -> RunStatus {
    let diagnostics = validate(cfg);
    if !diagnostics.is_empty() {
        return RunStatus::Invalid(diagnostics);
    }
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        return RunStatus::Io(e);
    }
    let result = execute(cfg);
    let written = match &result {
        Ok(out) => write_outputs(cfg, out),
        Err(e) => write_error(&cfg.out, e),
    };
    if let Err(e) = written {
        return RunStatus::Io(e);
    }
    match result {
        Ok(RunOutput { failure: None, .. }) => RunStatus::Ok,
        Ok(RunOutput { failure: Some(e), .. }) | Err(e) => RunStatus::Numerical(e),
    }
}

fn write_outputs(cfg: &ExperimentConfig, out: &RunOutput) -> std::io::Result<()> {
    for t in &out.tables {
        t.write(&cfg.out)?;
    }
    let summary = json!({ "config": cfg, "results": out.summary });
    output::write_json(&cfg.out, "summary.json", &summary)?;
    if let Some(e) = &out.failure {
        write_error(&cfg.out, e)?;
    }
    Ok(())
}
