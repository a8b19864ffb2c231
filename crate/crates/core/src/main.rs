use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use field_recycler::runner::{self, Experiment, ExperimentConfig, FileConfig, Overrides, RunStatus};

/// Optimal cavity fields for qubit rotations: construction, recycling and error analysis.
#[derive(Parser, Debug)]
#[command(name = "field-recycler", version)]
struct Cli {
    experiment: Experiment,
    /// Flat TOML file with run parameters; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Photon-number scale fixing the pulse area.
    #[arg(long)]
    n_theta: Option<u32>,
    /// Rotation angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Azimuth of the ancilla state in radians.
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    /// Ancilla preparation error.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Fock-space truncation.
    #[arg(long)]
    dim: Option<usize>,
}

const THREADS_VAR: &str = "FIELD_RECYCLER_THREADS";

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .expect("global thread pool is configured once");
            }
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got {v:?}");
                return ExitCode::from(runner::EXIT_CONFIG as u8);
            }
        }
    }

    let file = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(msg) => {
                eprintln!("error: {msg}");
                return ExitCode::from(runner::EXIT_CONFIG as u8);
            }
        },
        None => FileConfig::default(),
    };
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        n_theta: cli.n_theta,
        theta: cli.theta,
        phi: cli.phi,
        lambda: cli.lambda,
        dim: cli.dim,
    };
    let cfg = ExperimentConfig::resolve(cli.experiment, file, overrides);

    let status = runner::run(&cfg);
    match &status {
        RunStatus::Ok => println!("{}: outputs in {}", cfg.experiment.name(), cfg.out.display()),
        RunStatus::Invalid(diags) => {
            for d in diags {
                eprintln!("config error: {}: {}", d.field, d.message);
            }
        }
        RunStatus::Numerical(e) => eprintln!("numerical failure: {e}"),
        RunStatus::Io(e) => eprintln!("output error: {e}"),
    }
    ExitCode::from(status.exit_code() as u8)
}
