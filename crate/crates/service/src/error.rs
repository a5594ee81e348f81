use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use clay_core::{BackendError, WorkflowError};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiCode {
    Validation,
    IllegalTransition,
    BackendFailure,
    NotFound,
    Configuration,
}

impl ApiCode {
    pub fn status(self) -> StatusCode {
        match self {
            ApiCode::Validation => StatusCode::BAD_REQUEST,
            ApiCode::IllegalTransition => StatusCode::CONFLICT,
            ApiCode::BackendFailure => StatusCode::BAD_GATEWAY,
            ApiCode::NotFound => StatusCode::NOT_FOUND,
            ApiCode::Configuration => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ApiCode,
    pub message: String,
    /// Only ever true for `backend_failure`.
    pub retriable: bool,
}

impl ApiError {
    pub fn new(code: ApiCode, message: impl Into<String>) -> Self {
        ApiError { code, message: message.into(), retriable: false }
    }

    pub fn validation(message: impl Into<String>) -> Self {
        Self::new(ApiCode::Validation, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ApiCode::NotFound, message)
    }
}

impl From<BackendError> for ApiError {
    fn from(e: BackendError) -> Self {
        let code = match &e {
            BackendError::UnknownStyle { .. } | BackendError::InvalidRequest(_) => ApiCode::Validation,
            BackendError::Configuration(_) => ApiCode::Configuration,
            BackendError::Transport { .. } | BackendError::Parse { .. } | BackendError::Structural(_) => {
                ApiCode::BackendFailure
            }
        };
        let retriable = code == ApiCode::BackendFailure && e.retriable();
        ApiError { code, message: e.to_string(), retriable }
    }
}

impl From<WorkflowError> for ApiError {
    fn from(e: WorkflowError) -> Self {
        let code = match &e {
            WorkflowError::Backend(b) => return b.clone().into(),
            WorkflowError::Validation(_) | WorkflowError::UnsupportedMode { .. } | WorkflowError::Precondition(_) => {
                ApiCode::Validation
            }
            WorkflowError::IllegalTransition { .. } | WorkflowError::WrongPhase { .. } => ApiCode::IllegalTransition,
            WorkflowError::NotFound(_) => ApiCode::NotFound,
            WorkflowError::Store(_) => ApiCode::Configuration,
        };
        ApiError::new(code, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(what) => ApiError::not_found(what),
            other => ApiError::new(ApiCode::Configuration, other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.code.status(), Json(self)).into_response()
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("store i/o at {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt record {path}: {message}")]
    Corrupt { path: String, message: String },
}

impl StoreError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        StoreError::Io { path: path.display().to_string(), source }
    }
}

/// Failures of the command-line entry points.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
    #[error("{path}: line {line}: {message}")]
    Log { path: String, line: usize, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Workflow(#[from] WorkflowError),
    #[error(transparent)]
    Analytics(#[from] clay_analytics::AnalyticsError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}
