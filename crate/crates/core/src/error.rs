use thiserror::Error;

/// Failures raised by the numerical pipeline.
///
/// Validation problems in a configuration are reported as data through
/// [`crate::model::ValidationReport`]; this type is reserved for operations
/// that cannot produce a meaningful result.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("mismatched inputs: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
