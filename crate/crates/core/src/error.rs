use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("state must have unit trace, got {0}")]
    BadTrace(f64),
    #[error("matrix is not orthogonal (deviation {0:.3e})")]
    NotOrthogonal(f64),
    #[error("measurement direction {index} of party {party} has norm {norm}, expected 1")]
    NonUnitRow {
        party: char,
        index: usize,
        norm: f64,
    },
    #[error("gauge is infinite: correlation matrix violates the range condition")]
    InfiniteGauge,
    #[error("support function vanishes for this coefficient matrix")]
    ZeroSupport,
    #[error("invalid argument: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
