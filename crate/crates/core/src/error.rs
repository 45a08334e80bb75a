use thiserror::Error;

/// Errors surfaced by every fallible operation in the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// A qubit cap or dense-table feasibility cap was exceeded.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("sampling failed after {attempts} attempts: {reason}")]
    SamplingFailure { attempts: u64, reason: String },

    #[error("partition invariant violated: {0}")]
    PartitionViolation(String),

    #[error("malformed encoding: {0}")]
    Encoding(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
