use thiserror::Error;

/// Errors raised by the protocol engine, the analysis routines and the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("unsupported noise rate {0}: must be 0 or 2^-k with k >= 2")]
    NoiseRate(f64),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("tree capacity {capacity} is below the population bound {required}")]
    Capacity { capacity: u64, required: u64 },

    #[error("invalid node path: {0}")]
    InvalidPath(String),

    #[error("tree is full ({0} leaves assigned)")]
    TreeFull(u64),

    #[error("tag {0} is already registered")]
    DuplicateTag(u64),

    #[error("targets are infeasible: {0}")]
    Infeasible(String),

    #[error("invalid encoding: {0}")]
    Encoding(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(op: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            op,
            expected,
            actual,
        })
    }
}
