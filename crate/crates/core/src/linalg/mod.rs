//! Scalars, dense matrices, factored covariances and the LDLᵀ factorization.

mod cov;
mod ldlt;
mod matrix;
mod scalar;

pub use cov::CovFactor;
pub use ldlt::{integer_sum_of_squares, ldlt, rational_sum_of_squares, Ldlt};
pub use matrix::{scalar_from_json, scalar_to_json, Matrix};
pub use scalar::{Scalar, ScalarParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    #[error("matrix is not positive semi-definite: {reason}")]
    NotPsd { reason: String },
    #[error("malformed matrix JSON: {0}")]
    Json(String),
}
