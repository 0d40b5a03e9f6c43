use alloc::string::String;

use thiserror::Error;

use crate::events::UserId;

/// A model parameter or config entry failed validation.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("invalid `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

/// An operation was invoked on a model variant it does not apply to.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{operation} requires the {required} variant")]
pub struct UsageError {
    pub operation: &'static str,
    pub required: &'static str,
}

/// A record violates an [`crate::events::EventLog`] invariant.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum LogError {
    #[error("item {0} appears more than once")]
    DuplicateItem(u64),
    #[error("user {user} has two records at t={t}")]
    DuplicateTimestamp { user: UserId, t: i64 },
    #[error("record at t={t} is after the capture time {capture_time}")]
    AfterCapture { t: i64, capture_time: i64 },
    #[error("attention {0} is not a nonnegative finite number")]
    InvalidAttention(f64),
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EstimateError {
    #[error("insufficient data for {what}: need {needed}, have {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    /// All paired differences are identical; carries the sign of their mean.
    #[error("paired differences have zero variance (mean difference sign {mean_sign})")]
    DegenerateVariance { mean_sign: i8 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}
