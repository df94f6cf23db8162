//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by kernel construction, solving, rounding, metrics,
/// data generation, and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument or data shape is invalid.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A NaN or infinite value was found where finite data is required.
    #[error("non-finite value in {0}")]
    NonFinite(String),

    /// A kernel matrix is unusable (e.g. numerically zero trace after
    /// centering), so trace scaling or solving cannot proceed.
    #[error("degenerate kernel: {0}")]
    DegenerateKernel(String),

    /// The view-weight update has no well-defined solution (e.g. every
    /// view's within-cluster variance is numerically zero).
    #[error("degenerate view weights: {0}")]
    DegenerateTheta(String),

    /// A spectral embedding row has zero norm and cannot be normalized.
    #[error("degenerate embedding: row {0} has zero norm")]
    DegenerateEmbedding(usize),

    /// A numerical routine failed to converge or produced invalid output.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A delimited input file failed to parse; `line` is 1-based.
    #[error("csv parse error at line {line}: {msg}")]
    Csv { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI maps this error to: 2 for input or usage
    /// problems, 3 for numerical/degeneracy failures discovered mid-solve.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_) | Error::NonFinite(_) | Error::Csv { .. } | Error::Io(_) => 2,
            Error::DegenerateKernel(_)
            | Error::DegenerateTheta(_)
            | Error::DegenerateEmbedding(_)
            | Error::Numerical(_) => 3,
        }
    }
}
