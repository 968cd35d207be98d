use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock index {n} outside truncation 0..{dim}")]
    FockRange { n: usize, dim: usize },

    #[error("truncation too small for {what}: leakage {leakage:.3e} exceeds tolerance {tolerance:.1e}{}", required_dim.map(|d| format!(" (need dim >= {d})")).unwrap_or_default())]
    Truncation {
        what: String,
        leakage: f64,
        tolerance: f64,
        required_dim: Option<usize>,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |H - H^dagger| = {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("resonance conditions not satisfied: {0}")]
    ResonanceFailed(String),

    #[error("outcome {level} has zero probability; post-measurement state undefined")]
    ZeroProbability { level: char },

    #[error("leakage {leakage:.3e} in mode {mode} exceeds gate {gate:.1e}{}", last_valid.map(|i| format!(" (last valid sample {i})")).unwrap_or_default())]
    LeakageExceeded {
        mode: char,
        leakage: f64,
        gate: f64,
        last_valid: Option<usize>,
    },

    #[error("stepped integration did not converge: error {error:.3e} at dt = {dt:.3e}")]
    NonConvergence { dt: f64, error: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
