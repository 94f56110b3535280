use std::path::PathBuf;

use thiserror::Error;

use crate::spectral::SpectralField;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong in the library. The CLI maps the variants
/// onto exit codes through [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("input has nonzero mean {mean:e} (tolerance {tol:e})")]
    NonzeroMean { mean: f64, tol: f64 },

    #[error("entropy undefined at node {node} (u = {value:e})")]
    EntropyDomain { node: usize, value: f64 },

    #[error("quadrature did not converge on [{a}, {b}]: error estimate {estimate:e} after {intervals} subintervals")]
    Quadrature {
        a: f64,
        b: f64,
        estimate: f64,
        intervals: usize,
    },

    #[error("implicit step failed: {0}")]
    StepFailure(Box<StepFailure>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

/// Payload of a failed implicit step: the last iterate and how the residual
/// evolved, so the caller can decide whether to retry with a smaller step.
#[derive(Debug, Clone)]
pub struct StepFailure {
    pub last_iterate: SpectralField,
    pub residual_history: Vec<f64>,
}

impl Error {
    pub(crate) fn step_failure(last_iterate: SpectralField, residual_history: Vec<f64>) -> Self {
        Error::StepFailure(Box::new(StepFailure {
            last_iterate,
            residual_history,
        }))
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 usage/configuration, 2 numeric failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Parse(_) => 1,
            Error::Io { .. } => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for StepFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let last = self.residual_history.last().copied().unwrap_or(f64::NAN);
        write!(
            f,
            "{} iterations, last residual {:e}",
            self.residual_history.len().saturating_sub(1),
            last
        )
    }
}
