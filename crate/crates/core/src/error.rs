use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("vocabulary is empty after filtering")]
    EmptyVocabulary,
    #[error("input matrix has a negative entry {value} at ({row}, {col})")]
    NegativeInput { row: usize, col: usize, value: f64 },
    #[error("term `{0}` never occurs in the reference corpus")]
    UndefinedTerm(String),
    #[error("no topic has at least two countable terms")]
    NoScorableTopics,
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
}
