use thiserror::Error;

use crate::field::Box3;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected d={expected}, got d={got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("evaluation region leaves the field domain; missing region {missing:?}")]
    Domain { missing: Box3 },

    #[error("empty integration region")]
    EmptyRegion,

    #[error("CFL violation: dt={dt:e} exceeds admissible {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("exponent relation violated: {0}")]
    ExponentRelation(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
