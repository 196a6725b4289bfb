use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("PPM error at byte {offset}: {detail}")]
    Ppm { offset: usize, detail: String },
    #[error("manifest line {line}: {detail}")]
    Manifest { line: usize, detail: String },
    #[error("missing file {0}")]
    MissingFile(PathBuf),
    #[error("{0}")]
    Invalid(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] tide_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> DataError {
    let path = path.into();
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DataError::MissingFile(path)
        } else {
            DataError::Io { path, source }
        }
    }
}
