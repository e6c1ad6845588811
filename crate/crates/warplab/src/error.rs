use thiserror::Error;

/// Failure modes shared by every module in the crate.
///
/// Callers that drive experiments from a shell map these onto exit codes, so
/// the variants deliberately distinguish "you asked for something malformed"
/// from "a cap was hit" from "iteration did not settle".
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("resource limit: {what} needs {requested}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        cap: usize,
        requested: usize,
    },

    #[error("discretization failure: {0}")]
    Discretization(String),

    #[error("did not converge: {0}")]
    Convergence(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
