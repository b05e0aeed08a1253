use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument or configuration violates a documented precondition.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A quadrature or series did not reach its tolerance within the refinement budget.
    #[error("{context}: residual {residual:.3e} exceeds tolerance {tolerance:.3e} after {intervals} subintervals")]
    Numeric {
        context: String,
        residual: f64,
        tolerance: f64,
        intervals: usize,
    },

    /// A served user has zero point-to-point rate, so its subfile never completes.
    #[error("unbounded delay: group {group} user {user} has zero rate")]
    UnboundedDelay { group: usize, user: usize },
}

impl Error {
    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
