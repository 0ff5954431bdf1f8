use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("potential is singular at R={r}, rho={rho}, cos(theta)={x}")]
    Singularity { r: f64, rho: f64, x: f64 },

    #[error("index {index} out of bounds (limit {limit})")]
    Index { index: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("config line {line}: key `{key}`: {msg}")]
    Config { line: usize, key: String, msg: String },

    #[error("result store not found or incomplete: {}", .0.display())]
    MissingStore(PathBuf),

    #[error("malformed store file {}: {msg}", .path.display())]
    Format { path: PathBuf, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
