use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("metric sets differ between conditions: {0}")]
    MetricMismatch(String),

    #[error("malformed csv at line {line}: {message}")]
    Csv { line: u64, message: String },
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;
