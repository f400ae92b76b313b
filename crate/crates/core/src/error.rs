use std::path::PathBuf;

use thiserror::Error;

use crate::transforms::Face;

/// Errors raised by the solver, the diagnostics and the CLI plumbing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid {nx}x{ny}x{nz} does not resolve truncation K={k}, M={m}: {reason}")]
    GridTooSmall {
        nx: usize,
        ny: usize,
        nz: usize,
        k: usize,
        m: usize,
        reason: String,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("boundary values inconsistent with parity: component {component} at face {face} has magnitude {value:e}")]
    BoundaryInconsistent {
        component: usize,
        face: Face,
        value: f64,
    },

    #[error("field shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parity mismatch: {0}")]
    ParityMismatch(String),

    #[error("Sobolev index {0} outside 0..=3")]
    SobolevIndex(u32),

    #[error("blow-up/instability at t={t}: norm {norm}")]
    BlowUp { t: f64, norm: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input for log-log fit: {0}")]
    Fit(String),

    #[error("checkpoint {path}: bad magic {found:?}")]
    BadMagic { path: PathBuf, found: [u8; 4] },

    #[error("checkpoint {path}: unsupported version {found}")]
    BadVersion { path: PathBuf, found: u32 },

    #[error("checkpoint {path}: truncated, expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },

    #[error("checkpoint {path}: shape mismatch: {reason}")]
    CheckpointShape { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
