use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A bit count that the caller's file size does not divide.
    #[error("partition error: {0}")]
    Partition(String),
    #[error("decode error: {0}")]
    Decode(String),
    /// Parameters fall outside the case a formula or construction covers.
    #[error("regime error: {0}")]
    Regime(String),
    #[error("search space too large: {count} demand vectors exceed the limit of {limit}; enable sampling or raise the limit")]
    TooLarge { count: u128, limit: u128 },
    /// Two independent routes to the same value disagree.
    #[error("internal consistency error: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
