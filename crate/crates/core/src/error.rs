use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("assembled operator is corrupt: {0}")]
    Assembly(String),

    #[error("blow-up at step {step} (t = {t}): max |u| = {sup_norm:e}, L2 norm = {l2_norm:e}")]
    BlowUp {
        step: usize,
        t: f64,
        sup_norm: f64,
        l2_norm: f64,
    },

    #[error("Picard map is not a contraction after {halvings} halvings (measured ratios {ratios:?})")]
    NoContraction { halvings: usize, ratios: Vec<f64> },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_)
            | Error::Grid(_)
            | Error::Dimension { .. }
            | Error::Config(_)
            | Error::Parse { .. }
            | Error::Io { .. } => 2,
            Error::Numerical(_)
            | Error::Assembly(_)
            | Error::BlowUp { .. }
            | Error::NoContraction { .. } => 3,
        }
    }
}
