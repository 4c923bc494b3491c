use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Subsystem labels or dimensions do not fit together.
    #[error("layout error: {0}")]
    Layout(String),

    /// A numerical precondition (Hermiticity, normalization, smoothness) failed.
    #[error("domain error: {0}")]
    Domain(String),

    /// A detector factor was not in its ready state when its event fired.
    #[error("state error: {0}")]
    State(String),

    /// A Kraus set does not resolve the identity.
    #[error("completeness violated by {deviation:.1e} at detector '{detector}'")]
    Validation { detector: String, deviation: f64 },

    /// Event times are not strictly increasing.
    #[error("schedule error: {0}")]
    Schedule(String),

    /// Unknown detector, outcome or query key.
    #[error("key error: {0}")]
    Key(String),

    /// The conditioning event has (numerically) zero probability.
    #[error("conditioning on a null event: P({given}) = {probability:e}")]
    ConditioningOnNullEvent { given: String, probability: f64 },
}

impl Error {
    pub(crate) fn layout(msg: impl Into<String>) -> Self {
        Error::Layout(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn key(msg: impl Into<String>) -> Self {
        Error::Key(msg.into())
    }
}
