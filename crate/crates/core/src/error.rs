use thiserror::Error;

/// Errors raised across the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the operation's domain (empty center set, mismatched k, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// No feasible solution exists for the request.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// The distance data violates a metric axiom.
    #[error("invalid metric: {0}")]
    InvalidMetric(String),

    /// An exhaustive oracle would exceed its enumeration budget.
    #[error("oracle budget exceeded: {0}")]
    Budget(String),

    /// Malformed input file or record.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by bad input rather than a failure while running.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Domain(_) | Error::Infeasible(_) | Error::InvalidMetric(_) | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! domain {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
macro_rules! infeasible {
    ($($arg:tt)*) => { $crate::error::Error::Infeasible(format!($($arg)*)) };
}
pub(crate) use domain;
pub(crate) use infeasible;
