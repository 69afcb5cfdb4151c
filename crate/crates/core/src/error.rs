use std::io;

/// Every failure the library can report.
///
/// `NotSatisfied`, `UnknownUser` and `VerificationFailed` are kept apart so
/// that callers can tell a policy mismatch from a revoked identity or a
/// tampered ciphertext.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("invalid group element")]
    InvalidElement,
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
    #[error("duplicate attribute {0}")]
    DuplicateAttribute(String),
    #[error("unsupported parameter: {0}")]
    UnsupportedParameter(String),
    #[error("attribute {0} is not managed by this authority")]
    WrongAuthority(String),
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("unknown authority {0}")]
    UnknownAuthority(String),
    #[error("no unused pool entry for attribute {0}")]
    PoolEmpty(String),
    #[error("no attribute key held for {0}")]
    MissingAttributeKey(String),
    #[error("attributes do not satisfy the access policy")]
    NotSatisfied,
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("verification failed")]
    VerificationFailed,
    #[error("not found: {0}")]
    NotFound(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("key issuance aborted: {0}")]
    IssuanceAborted(String),
    #[error("identity {0} has been revoked")]
    Revoked(String),
    #[error("service unavailable: {0}")]
    Unavailable(String),
    #[error("{0}")]
    Other(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
