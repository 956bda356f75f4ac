use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("bad snapshot format: {0}")]
    Format(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("point outside the tubular band (|r| = {distance}, limit {limit})")]
    OutsideBand { distance: f64, limit: f64 },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("profile table too short: tail mass {tail:e} exceeds {limit:e} of sigma")]
    ProfileTooShort { tail: f64, limit: f64 },

    #[error("{solver} did not converge in {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("solver abort: {0}")]
    Abort(String),

    #[error("contour extraction failed: {0}")]
    Contour(String),

    #[error("decay-rate fit failed: {0}")]
    DecayFit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user configuration rather than by a
    /// numerical failure.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
