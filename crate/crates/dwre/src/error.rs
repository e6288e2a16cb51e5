use thiserror::Error;

/// Errors raised by the simulation library.
///
/// The variants are coarse on purpose: the command-line front end maps
/// each of them onto a distinct exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("configuration is not generic: {0}")]
    NotGeneric(String),
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! invalid {
    ($($arg:tt)*) => { $crate::error::Error::Invalid(format!($($arg)*)) };
}
pub(crate) use invalid;
