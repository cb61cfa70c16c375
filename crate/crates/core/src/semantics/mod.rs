//! Denotations of circuits as conditional Gaussian mixtures.

mod eval;
mod mixture;
mod sample;

pub use eval::{eval, eval_row, eval_tables, interp_generator};
pub use mixture::{canonicalize_row, compose, deviation, equal, tensor, BitVec, CGMixture, GaussComponent};
pub use sample::{moments, sample, sample_many, Moments, RowSampler, SAMPLE_CHUNK};

use crate::diagram::TypeWord;

/// Default absolute tolerance for float comparisons.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Default bound on the number of Boolean inputs of an evaluated term.
pub const DEFAULT_BOOL_INPUT_CAP: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalOptions {
    pub tolerance: f64,
    pub bool_input_cap: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions { tolerance: DEFAULT_TOLERANCE, bool_input_cap: DEFAULT_BOOL_INPUT_CAP }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemanticsError {
    #[error("{inputs} Boolean inputs exceed the cap of {cap}")]
    InputCapExceeded { inputs: usize, cap: usize },
    #[error("type mismatch: {left} vs {right}")]
    TypeMismatch { left: TypeWord, right: TypeWord },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("malformed mixture JSON: {0}")]
    Json(String),
}
