use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(usize),

    #[error("invalid rank {k} for dimension {n}")]
    InvalidRank { n: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("not a projector: eigenvalue {eigenvalue} is {distance:e} away from 0 and 1")]
    NotAProjector { eigenvalue: f64, distance: f64 },

    #[error("matrix is not unitary (||U^dag U - I|| = {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not antisymmetric (||U^t + U|| = {0:e})")]
    NotAntisymmetric(f64),

    #[error("superoperator is not invertible (smallest singular value {0:e})")]
    NotInvertible(f64),

    #[error("rank {k} does not divide dimension {n}")]
    NotADivisor { n: usize, k: usize },

    #[error("map is not trace-preserving (violation {0:e})")]
    NotTracePreserving(f64),

    #[error("map does not send the standard block family to an orthogonal resolution of identity (violation {0:e})")]
    NotABlockPreserver(f64),

    #[error("candidate residual {residual:e} exceeds acceptance threshold {accept:e}")]
    RejectedCandidate { residual: f64, accept: f64 },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn param(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
