use std::path::PathBuf;

use crate::state::QubitAddress;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("qubit {0} is not active in the register")]
    InactiveQubit(QubitAddress),

    #[error("qubit {0} is already active in the register")]
    DuplicateQubit(QubitAddress),

    #[error("registers differ: {0}")]
    RegisterMismatch(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    /// A projection or post-selection whose success probability vanishes.
    #[error("impossible outcome (probability {probability:e})")]
    ImpossibleOutcome { probability: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed after {iterations} iterations: {reason}")]
    FitFailure { iterations: usize, reason: String },

    #[error(
        "calibration failed after {iterations} iterations \
         (population residual {population_residual:.4}, coherence residual {coherence_residual:.4})"
    )]
    CalibrationFailure {
        iterations: usize,
        population_residual: f64,
        coherence_residual: f64,
        double_pair_fraction: f64,
        bitflip_prob: f64,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
