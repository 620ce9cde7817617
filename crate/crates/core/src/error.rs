use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument left the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A structurally invalid input (empty vectors, inverted ranges, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An iterative scheme exhausted its budget without reaching tolerance.
    #[error("did not converge: {what} (best estimate {value:.6e}, error estimate {error:.3e})")]
    NonConvergence {
        what: String,
        value: f64,
        error: f64,
    },

    /// A sampling loop ran out of rejection budget.
    #[error("rejection budget exhausted: {0}")]
    BudgetExhausted(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
