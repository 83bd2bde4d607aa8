use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("horizon vector is zero")]
    ZeroHorizon,
    #[error("rho evaluated at its pole tau = 1/||a||^2")]
    PoleAtTauM,
    #[error("conic dogleg step is degenerate: {0}")]
    DegenerateConicStep(&'static str),
    #[error("Hessian update skipped: s^T B s = {0:e}")]
    SkippedUpdate(f64),
    #[error("Hessian update lost positive definiteness")]
    UpdateNotPositiveDefinite,
    #[error("objective or gradient is not finite at the starting point")]
    NonFiniteStart,
    #[error("unknown problem `{0}`")]
    UnknownProblem(String),
    #[error("problem `{name}` does not admit dimension {n}: {reason}")]
    BadDimension { name: String, n: usize, reason: &'static str },
}

pub type Result<T> = std::result::Result<T, Error>;
