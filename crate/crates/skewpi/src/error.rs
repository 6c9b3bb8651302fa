use thiserror::Error;

/// Every failure the library reports.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("derivation does not extend: {0}")]
    NotExtendable(String),
    #[error("not locally nilpotent within index {0}")]
    NotLocallyNilpotent(usize),
    #[error("derivation cannot be removed: {0}")]
    NotRemovable(String),
    #[error("variables cannot be reordered: {0}")]
    NotReorderable(String),
    #[error("no closed form for {0}")]
    NoClosedForm(String),
    #[error("enumeration of {0} points exceeds the bound")]
    BoundExceeded(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;
