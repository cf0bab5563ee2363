use num_bigint::BigUint;
use thiserror::Error;

/// Errors raised by the construction, counting, and verification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// A requested object would exceed the configured digit or enumeration cap.
    #[error("size limit exceeded: {what} requires {required} but the cap is {cap}")]
    SizeLimit {
        what: String,
        required: BigUint,
        cap: u64,
    },

    #[error("needs more digits: {required} required, {available} available")]
    NeedsMoreDigits { required: u64, available: u64 },

    #[error("needs more segments: position {requested} requested, construction has {available}")]
    NeedsMoreSegments { requested: u64, available: u64 },

    #[error("position {position} out of range 1..={len}")]
    OutOfRange { position: u64, len: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn size_limit(what: impl Into<String>, required: impl Into<BigUint>, cap: u64) -> Self {
        Error::SizeLimit {
            what: what.into(),
            required: required.into(),
            cap,
        }
    }
}
