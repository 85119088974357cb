use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A refinement loop ran out of budget. Carries the last two estimates so
    /// the caller can judge how far from converged it was.
    #[error("{what} did not converge: last estimate {last}, previous {previous}")]
    NonConvergence {
        what: &'static str,
        last: f64,
        previous: f64,
    },

    #[error("grid too small: |χ|² reaches {boundary} on the boundary (limit {limit})")]
    GridTooSmall { boundary: f64, limit: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("finite-difference step {step} is noise dominated (noise {noise:e}); try step {recommended}")]
    NoisyDerivative {
        step: f64,
        noise: f64,
        recommended: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
