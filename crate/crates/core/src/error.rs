use thiserror::Error;

use crate::solver::Status;

/// Errors raised while building, compiling, solving or differentiating a problem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("atom `{atom}` expects {expected} argument(s), got {got}")]
    Arity {
        atom: &'static str,
        expected: &'static str,
        got: usize,
    },

    #[error("shape mismatch in `{context}`: lengths {lengths:?} do not broadcast")]
    Shape {
        context: String,
        lengths: Vec<usize>,
    },

    #[error("power with a parameter exponent requires a non-parametrized base")]
    PowerRule,

    #[error("invalid exponent: {0}")]
    Exponent(String),

    #[error("constant entries must be finite and strictly positive, got {0}")]
    NonPositiveConstant(f64),

    #[error("index {index} out of range for expression of length {len}")]
    Index { index: usize, len: usize },

    #[error("problem is not DGP: {}", .0.join("; "))]
    NotDgp(Vec<String>),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("parameter `{0}` has no value")]
    MissingValue(String),

    #[error("duplicate name `{0}`")]
    DuplicateName(String),

    #[error("unknown name `{0}`")]
    UnknownName(String),

    #[error("cone program data contains NaN or infinite entries")]
    Data,

    #[error("solver finished with status {0}")]
    NonOptimal(Status),

    #[error("no derivative state: solve with derivatives enabled first")]
    NoDerivativeState,

    #[error("LSQR did not converge after {iterations} iterations (residual {residual:e})")]
    LsqrNoConvergence { iterations: usize, residual: f64 },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("unsupported primitive: {0}")]
    Unsupported(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
