use std::path::PathBuf;

use ricci_lab_core::dirichlet::DirichletError;
use ricci_lab_core::error::LabError;
use ricci_lab_core::mmspace::SpaceError;
use ricci_lab_core::transport::TransportError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("format: {0}")]
    Format(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Lab(#[from] LabError),
}

impl From<SpaceError> for AppError {
    fn from(e: SpaceError) -> Self {
        AppError::Lab(e.into())
    }
}

impl From<DirichletError> for AppError {
    fn from(e: DirichletError) -> Self {
        AppError::Lab(e.into())
    }
}

impl From<TransportError> for AppError {
    fn from(e: TransportError) -> Self {
        AppError::Lab(e.into())
    }
}

pub fn io_error(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> AppError {
    let path = path.into();
    move |source| AppError::Io { path, source }
}

pub fn json_error(context: impl Into<String>) -> impl FnOnce(serde_json::Error) -> AppError {
    let context = context.into();
    move |source| AppError::Json { context, source }
}

pub type Result<T, E = AppError> = std::result::Result<T, E>;
