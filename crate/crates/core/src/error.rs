use thiserror::Error;

/// Errors produced while building states, applying channels or running experiments.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Probability mass that does not fit in the truncated Fock space.
    #[error("truncation error: {mass:.3e} probability outside the retained Fock levels (tolerance {tol:.1e})")]
    Truncation { mass: f64, tol: f64 },

    #[error("Fock dimension {dim} too small, at least {required} levels required")]
    DimensionTooSmall { dim: usize, required: usize },

    /// Ancilla colatitude at a pole, where the fixed-point state is undefined.
    #[error("degenerate ancilla: colatitude {theta} outside the open interval (0, pi)")]
    DegenerateAncilla { theta: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("no convergence after {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
