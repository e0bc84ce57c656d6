use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the calibration pipeline and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("no static data")]
    NoStaticData,

    #[error("degenerate pose geometry: add poses with distinct orientations (condition number {condition:.3e})")]
    DegenerateGeometry { condition: f64 },

    #[error("rotation not observable at pose {pose}")]
    RotationNotObservable { pose: usize },

    #[error("sign resolution failed: check rotation direction vs gravity")]
    SignResolution,

    #[error("invalid session: {0}")]
    InvalidSession(String),

    #[error("accelerometer fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {runs} Monte-Carlo runs failed (first error: {first})")]
    TooManyFailures { failed: usize, runs: usize, first: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
