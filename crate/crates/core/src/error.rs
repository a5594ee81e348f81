use thiserror::Error;

use crate::session::{Phase, SessionMode};

/// Failure of a generative backend call.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("backend transport failed after {attempts} attempt(s) (status {status:?}): {body_excerpt}")]
    Transport { status: Option<u16>, body_excerpt: String, attempts: u32 },

    #[error("could not parse backend response: {reason}")]
    Parse { reason: String, raw: String, retry_advised: bool },

    #[error("backend response violates structure: {0}")]
    Structural(String),

    #[error("no known style matches {requested:?}; known styles: {known:?}")]
    UnknownStyle { requested: Vec<String>, known: Vec<String> },

    #[error("invalid backend request: {0}")]
    InvalidRequest(String),

    #[error("backend configuration: {0}")]
    Configuration(String),
}

impl BackendError {
    pub fn retriable(&self) -> bool {
        match self {
            BackendError::Transport { status, .. } => {
                !matches!(status, Some(code) if (400..500).contains(code) && *code != 429)
            }
            BackendError::Parse { retry_advised, .. } => *retry_advised,
            BackendError::Structural(_) => true,
            BackendError::UnknownStyle { .. }
            | BackendError::InvalidRequest(_)
            | BackendError::Configuration(_) => false,
        }
    }

    pub(crate) fn parse(reason: impl Into<String>, raw: &str) -> Self {
        BackendError::Parse { reason: reason.into(), raw: raw.to_string(), retry_advised: true }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkflowError {
    #[error("{0}")]
    Validation(String),

    #[error("illegal phase transition {from} -> {to}")]
    IllegalTransition { from: Phase, to: Phase },

    #[error("{op} is not allowed in phase {phase}")]
    WrongPhase { op: &'static str, phase: Phase },

    #[error("{op} is not supported in {mode} mode")]
    UnsupportedMode { op: &'static str, mode: SessionMode },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error(transparent)]
    Backend(#[from] BackendError),

    #[error("artifact store: {0}")]
    Store(String),
}

impl WorkflowError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        WorkflowError::Validation(msg.into())
    }
}

pub type Result<T, E = WorkflowError> = std::result::Result<T, E>;
