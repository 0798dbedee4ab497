use thiserror::Error;

#[derive(Debug, Error)]
pub enum RmtError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("eigensolver failed on matrix {hash}: {cause}")]
    Eigen { hash: String, cause: Box<RmtError> },
    /// Particles met despite step halving; carries the last accepted state.
    #[error("particle collision at t = {t} after {halvings} step halvings")]
    Collision {
        t: f64,
        halvings: u32,
        state: Vec<f64>,
    },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, RmtError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(RmtError::InvalidParameter(msg.into()))
}
