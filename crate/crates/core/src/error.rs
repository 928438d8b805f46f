use thiserror::Error;

/// Errors raised by the propagator library.
#[derive(Debug, Error)]
pub enum CfError {
    /// Inconsistent sizes or invalid parameters.
    #[error("configuration error: {0}")]
    Config(String),
    /// The requested quantity does not exist for the given inputs.
    #[error("domain error: {0}")]
    Domain(String),
    /// The model lacks something a scheme needs (e.g. potential derivatives).
    #[error("capability error: {0}")]
    Capability(String),
    #[error("unknown scheme `{0}`")]
    UnknownScheme(String),
    #[error("internal error: {0}")]
    Internal(String),
    /// Reference solution failed its self-consistency check.
    #[error("reference validation failed: {0}")]
    Reference(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CfError>;
