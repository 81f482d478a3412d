//! Library error type. The CLI maps variants onto process exit codes:
//! validation failures exit 2, guard violations exit 3.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Parameter or configuration violates a documented invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An exact-enumeration guard was exceeded; the result would not fit the
    /// documented size budget.
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),

    /// An iteration or stabilization loop hit its cap before reaching its
    /// tolerance. Carries the best value seen.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The derivative-free optimizer could not produce a finite value.
    #[error("optimizer failure: {0}")]
    OptimizerFailure(String),

    /// A coupled trajectory violated the order sandwich; this is a bug
    /// detector, not an expected runtime condition.
    #[error("coupling violation: {0}")]
    CouplingViolation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
