use thiserror::Error;

use crate::solver::SolverState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("iteration diverged at k = {k}: non-finite iterate")]
    Diverged {
        k: usize,
        /// Last state whose iterates were all finite.
        last_finite: Box<SolverState>,
    },

    #[error("no admissible step sizes: {0}")]
    Infeasible(String),

    #[error("internal inconsistency: {0}")]
    Internal(String),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}

pub(crate) fn check_dim(what: &str, got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return invalid(format!("{what}: dimension {got}, expected {expected}"));
    }
    Ok(())
}
