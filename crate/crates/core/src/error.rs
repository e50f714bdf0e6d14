use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid neighborhood: k = {k} must satisfy 1 <= k < n/2 for n = {n}")]
    InvalidNeighborhood { n: usize, k: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coupling matrix has no circulant generator")]
    NotCirculant,

    #[error("matrix of size {n} exceeds the dense eigensolver cap of {cap}")]
    DenseSizeCap { n: usize, cap: usize },

    #[error("near-defective matrix: eigen-residual {residual:e} at mode {mode} exceeds {limit:e}")]
    NearDefective { mode: usize, residual: f64, limit: f64 },

    #[error("eigenbasis is ill-conditioned (condition number {0:e}); mode expansion is unreliable")]
    IllConditioned(f64),

    #[error("matrix exponential would overflow (|t|·‖K‖∞ = {0:e}); use the log-domain reconstruction")]
    MagnitudeOverflow(f64),

    #[error("twist q = {q} aliases on a ring of n = {n} (need |q| < n/2)")]
    Aliasing { n: usize, q: i64 },

    #[error("sampling grid mismatch: {0}")]
    SamplingGrid(String),

    #[error("simulation diverged (non-finite phase) at t = {0}")]
    Divergence(f64),

    #[error("every contributing mode underflows at t = {0}")]
    DegenerateReconstruction(f64),

    #[error("reconstructed state vanishes at oscillator {0}; its phase is undefined")]
    UndefinedArgument(usize),

    #[error("trajectories are not aligned: {0}")]
    Alignment(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidSize(_)
            | Error::InvalidNeighborhood { .. }
            | Error::InvalidParameter(_)
            | Error::NotCirculant
            | Error::DenseSizeCap { .. }
            | Error::Aliasing { .. }
            | Error::SamplingGrid(_)
            | Error::Parse { .. }
            | Error::Json(_) => 2,
            Error::NearDefective { .. }
            | Error::IllConditioned(_)
            | Error::MagnitudeOverflow(_)
            | Error::Divergence(_)
            | Error::DegenerateReconstruction(_)
            | Error::UndefinedArgument(_) => 3,
            Error::Alignment(_) => 4,
            Error::Io { .. } | Error::Csv(_) => 1,
        }
    }
}
