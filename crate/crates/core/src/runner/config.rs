use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::fock;
use crate::optimal::{self, PulseSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    /// Recycle a coherent field after one ground-state atom and watch it settle.
    ConvergePi,
    /// The same, starting from the opposite coherent phase.
    ConvergeOppositePhase,
    /// Ensemble gate errors of amplitude-squeezed fields against the squeeze parameter.
    SqueezeSweep,
    /// Exact and approximate optimal states with their moments.
    StateGen,
    /// Recycling with imperfectly prepared ancillas.
    MixedAncilla,
    /// Perturbative identities for the mixed fixed point.
    Appendix,
    /// Ensemble gate errors of the optimal, companion, mixed and coherent fields.
    ErrorEval,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::ConvergePi => "converge-pi",
            Experiment::ConvergeOppositePhase => "converge-opposite-phase",
            Experiment::SqueezeSweep => "squeeze-sweep",
            Experiment::StateGen => "state-gen",
            Experiment::MixedAncilla => "mixed-ancilla",
            Experiment::Appendix => "appendix",
            Experiment::ErrorEval => "error-eval",
        }
    }

    fn uses_ensemble(self) -> bool {
        matches!(self, Experiment::SqueezeSweep | Experiment::ErrorEval)
    }

    fn iterates(self) -> bool {
        matches!(
            self,
            Experiment::ConvergePi | Experiment::ConvergeOppositePhase | Experiment::MixedAncilla
        )
    }
}

/// Keys accepted in a config file. Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_theta: Option<u32>,
    /// Rotation angle in radians.
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub ensemble_size: Option<usize>,
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub ground_atom_first: Option<bool>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n_theta: Option<u32>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub lambda: Option<f64>,
    pub dim: Option<usize>,
}

/// A fully resolved run description.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_theta: u32,
    /// Rotation angle `Theta`; the ancilla colatitude is half of it.
    pub rotation: f64,
    pub phi: f64,
    pub lambda: f64,
    /// Real coherent amplitude of the starting field.
    pub alpha: f64,
    pub r_grid: Vec<f64>,
    pub ensemble_size: usize,
    pub seed: u64,
    pub dim: Option<usize>,
    pub tol: f64,
    pub max_iters: usize,
    pub ground_atom_first: bool,
    pub out: PathBuf,
}

pub fn default_r_grid() -> Vec<f64> {
    (0..=30).map(|k| 0.02 * k as f64).collect()
}

impl ExperimentConfig {
    pub fn resolve(experiment: Experiment, file: FileConfig, cli: Overrides) -> Self {
        let lambda_default = if experiment == Experiment::MixedAncilla { 0.02 } else { 0.0 };
        let alpha_default = if experiment == Experiment::ConvergeOppositePhase { -5.0 } else { 5.0 };
        let iters_default = if experiment == Experiment::ConvergeOppositePhase { 4000 } else { 2000 };
        Self {
            experiment,
            n_theta: cli.n_theta.or(file.n_theta).unwrap_or(25),
            rotation: cli.theta.or(file.theta).unwrap_or(PI),
            phi: cli.phi.or(file.phi).unwrap_or(FRAC_PI_2),
            lambda: cli.lambda.or(file.lambda).unwrap_or(lambda_default),
            alpha: file.alpha.unwrap_or(alpha_default),
            r_grid: file.r_grid.unwrap_or_else(default_r_grid),
            ensemble_size: file.ensemble_size.unwrap_or(512),
            seed: cli.seed.or(file.seed).unwrap_or(1),
            dim: cli.dim.or(file.dim),
            tol: file.tol.unwrap_or(crate::recycler::DEFAULT_STEP_TOL),
            max_iters: file.max_iters.unwrap_or(iters_default),
            ground_atom_first: file.ground_atom_first.unwrap_or(true),
            out: cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out")),
        }
    }

    /// Pulse for the configured rotation, with the truncation override applied.
    pub fn pulse(&self) -> crate::Result<PulseSpec> {
        let spec = PulseSpec::for_rotation(self.rotation, self.phi, self.n_theta)?;
        Ok(match self.dim {
            Some(d) => spec.with_dim(d),
            None => spec,
        })
    }
}

/// One reason a configuration cannot run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub field: &'static str,
    pub message: String,
}

fn diag(field: &'static str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        field,
        message: message.into(),
    }
}

/// Static checks; an empty list means the run can start.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if cfg.n_theta == 0 {
        out.push(diag("n_theta", "must be at least 1"));
    }
    if !(cfg.rotation > 0.0 && cfg.rotation <= PI) {
        out.push(diag("theta", format!("rotation angle {} outside (0, pi]", cfg.rotation)));
    }
    if !cfg.phi.is_finite() {
        out.push(diag("phi", "must be finite"));
    }
    if !(0.0..0.5).contains(&cfg.lambda) {
        out.push(diag("lambda", format!("preparation error {} outside [0, 1/2)", cfg.lambda)));
    }
    if !cfg.alpha.is_finite() {
        out.push(diag("alpha", "must be finite"));
    }
    if cfg.experiment == Experiment::SqueezeSweep {
        if cfg.r_grid.is_empty() {
            out.push(diag("r_grid", "squeeze sweep needs at least one squeeze parameter"));
        }
        if cfg.r_grid.iter().any(|r| !r.is_finite()) {
            out.push(diag("r_grid", "squeeze parameters must be finite"));
        }
    }
    if cfg.experiment.uses_ensemble() && cfg.ensemble_size == 0 {
        out.push(diag("ensemble_size", "must be at least 1"));
    }
    if cfg.experiment.iterates() {
        if !(cfg.tol > 0.0) {
            out.push(diag("tol", "must be positive"));
        }
        if cfg.max_iters == 0 {
            out.push(diag("max_iters", "must be at least 1"));
        }
    }
    if let Some(d) = cfg.dim {
        if out.is_empty() {
            let required = required_dim(cfg);
            if d < required {
                out.push(diag(
                    "dim",
                    format!("{d} Fock levels are too few, at least {required} required"),
                ));
            }
        } else if d < 2 {
            out.push(diag("dim", "must be at least 2"));
        }
    }
    out
}

/// Smallest truncation that holds every state the experiment builds.
pub fn required_dim(cfg: &ExperimentConfig) -> usize {
    let tol = fock::DEFAULT_TAIL_TOL;
    let mut need = 2;
    if let Ok(spec) = PulseSpec::for_rotation(cfg.rotation.min(PI - 1e-12), cfg.phi, cfg.n_theta) {
        need = need.max(optimal::required_dim(&spec, tol));
    }
    match cfg.experiment {
        Experiment::ConvergePi | Experiment::ConvergeOppositePhase => {
            // one extra level for the photon the first atom may absorb or emit
            need = need.max(fock::coherent_min_dim(C64::new(cfg.alpha, 0.0), tol) + 1);
        }
        Experiment::SqueezeSweep | Experiment::ErrorEval => {
            need = need.max(fock::coherent_min_dim(C64::new((cfg.n_theta as f64).sqrt(), 0.0), tol));
        }
        _ => {}
    }
    need
}
