use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("{0}")]
    Invalid(String),
    #[error("sample {index} has zero norm")]
    ZeroVector { index: usize },
    #[error("matrix is not symmetric: |K[{i}][{j}] - K[{j}][{i}]| = {gap:e}")]
    NotSymmetric { i: usize, j: usize, gap: f64 },
    #[error(transparent)]
    Core(#[from] tide_core::Error),
    #[error(transparent)]
    Data(#[from] tide_data::DataError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(EvalError::Invalid(msg.into()))
}
