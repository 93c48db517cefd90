use thiserror::Error;

/// Coarse classification used by callers (the CLI maps it onto exit codes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// The mathematical object is undefined for the given input.
    Domain,
    /// A configured resource limit (exponent cap, working precision) was hit.
    Resource,
    /// Malformed textual or JSON input.
    Parse,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("exponent {exponent} exceeds the configured cap {cap}")]
    ExponentCap { exponent: String, cap: u64 },

    #[error("precision error: {0}")]
    Precision(String),

    #[error("generation {generation} is not enumerable ({reason}); use the exponent-space audit")]
    NonEnumerable { generation: usize, reason: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Domain(_) | Error::Fit(_) => ErrorKind::Domain,
            Error::ExponentCap { .. } | Error::Precision(_) | Error::NonEnumerable { .. } => {
                ErrorKind::Resource
            }
            Error::Parse(_) => ErrorKind::Parse,
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
