use alloc::string::String;

/// Errors reported by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not converge (estimated error {estimate:.3e} after {intervals} intervals)")]
    QuadratureNonConvergence { estimate: f64, intervals: usize },

    #[error("grid extent too small: kernel mass leakage {0:.3e}")]
    GridLeakage(f64),

    #[error("density operator is not rank 2 (smallest eigenvalue {0:.3e})")]
    DegenerateState(f64),

    #[error("ill-conditioned SLD solve (condition number {0:.3e})")]
    IllConditioned(f64),

    #[error("mode basis lost numerical rank at dimension {achieved}")]
    RankLoss { achieved: usize },

    #[error("outcome probabilities sum to {0} (expected 1)")]
    ProbabilitySum(f64),

    #[error("measurement modes are not orthonormal (defect {0:.3e})")]
    NotOrthonormal(f64),

    #[error("classical information exceeds the quantum bound (min eigenvalue of Q - F = {0:.3e})")]
    BoundViolation(f64),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
