use thiserror::Error;

/// Errors raised by the planning, field and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid interval: t={t} precedes s={s}")]
    InvalidInterval { t: f64, s: f64 },

    /// A covariance block could not be factored, or a damped linear system
    /// stayed singular after every damping escalation.
    #[error("numeric conditioning failure: {reason}")]
    NumericConditioning {
        reason: String,
        /// Last iterate reached before the failure, when one exists.
        last_iterate: Option<Vec<Vec<f64>>>,
    },

    #[error("planning failed: {0}")]
    PlanningFailed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn conditioning(reason: impl Into<String>) -> Self {
        Error::NumericConditioning {
            reason: reason.into(),
            last_iterate: None,
        }
    }
}
