use thiserror::Error;

/// Errors raised by the solver kernels and the file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field lives on a different grid than the one supplied")]
    GridMismatch,

    #[error("field has {got} entries, grid has {expected} cells")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite value {value} at cell {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("elliptic solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid initial data: {0}")]
    InvalidInitialData(String),

    #[error("{0}")]
    Config(#[from] crate::io::config::ConfigError),

    #[error("snapshot format: {0}")]
    Snapshot(String),

    #[error("csv format: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
