use thiserror::Error;

/// Errors raised by the radial solvers and estimate checkers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("function is singular at the origin; origin evaluation requested")]
    SingularAtOrigin,

    #[error("non-integrable singularity at the origin ({0})")]
    NonIntegrable(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}): {reason}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        reason: String,
    },

    #[error("monotone iteration diverged: sup u = {sup:e} exceeds cap after {iterations} iterations")]
    Divergence { iterations: usize, sup: f64 },

    #[error("continuation corrector failed at lambda = {lambda}: step fell below {min_step:e}")]
    CorrectorFailure { lambda: f64, min_step: f64 },

    #[error("branch has no fold: lambda is monotone along the branch")]
    NoFold,

    #[error("eigen iteration stagnated after {0} steps")]
    Stagnation(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
