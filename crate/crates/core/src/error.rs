use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain of an operation (bad dimension, non-finite argument).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// A numerical procedure failed (root finding, factorization, inversion).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("density has a pole at the mean for dimension {dim}")]
    Pole { dim: usize },

    #[error("interpolant evaluated at {z} outside its data span [{lo}, {hi}]")]
    Extrapolation { z: f64, lo: f64, hi: f64 },

    #[error("nesting violation: node {node} lies outside source span [{lo}, {hi}]")]
    NestingViolation { node: f64, lo: f64, hi: f64 },

    #[error("propagation error: {0}")]
    Propagation(String),

    #[error("degenerate posterior: all mixand weights vanished")]
    DegeneratePosterior,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io(_) => 2,
            _ => 3,
        }
    }
}
