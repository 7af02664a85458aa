//! Error types shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A state vector or belief contained NaN/inf components.
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A waveform violated the positive-definiteness bound or had
    /// non-positive duration.
    #[error("invalid waveform: {0}")]
    InvalidWaveform(String),

    /// A covariance factorization or inversion failed even after jitter.
    #[error("numerical degeneracy in {context}")]
    NumericalDegeneracy { context: String },

    /// Ground-truth propagation produced a non-finite state.
    #[error("simulation diverged at step {step}")]
    SimulationDiverged { step: usize },

    /// A filter predict/update failed; `step` is the 0-based cycle index.
    #[error("filter error at step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// Configuration file contained keys this version does not understand.
    #[error("unknown config keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    /// A configuration field violated its invariant.
    #[error("invalid config field `{field}`: {message}")]
    InvalidField { field: String, message: String },

    /// General configuration problem (syntax, empty feasible set, ...).
    #[error("config error: {0}")]
    Config(String),

    /// Bad input to a library operation (dimension mismatch, empty signal).
    #[error("input error: {0}")]
    Input(String),

    /// A data channel had zero variance and cannot be normalized.
    #[error("degenerate channel: row {row} has zero variance")]
    DegenerateChannel { row: usize },

    /// Requested latent dimension exceeds the data's usable rank
    /// (signal eigenvalue does not exceed the estimated noise floor).
    #[error("rank deficiency: {0}")]
    RankDeficiency(String),

    /// Monte Carlo harness failure (e.g. too many diverged runs).
    #[error("harness error: {0}")]
    Harness(String),

    /// Curves passed to a comparison had mismatched time axes.
    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wrap an error with the cycle index at which it occurred.
    pub fn at_step(self, step: usize) -> Error {
        Error::AtStep {
            step,
            source: Box::new(self),
        }
    }
}
