//! Scoring and statistics for comparing two study conditions.
//!
//! - [`instruments`]: NASA-TLX and Creativity Support Index arithmetic.
//! - [`ttest`]: pooled (default) and Welch two-sample t-tests with
//!   significance markers.
//! - [`report`]: per-metric comparison tables from CSV input.
//! - [`registry`]: the fixed catalog of survey metrics.

pub mod distribution;
pub mod error;
pub mod instruments;
pub mod registry;
pub mod report;
pub mod ttest;

pub use error::{AnalyticsError, Result};
pub use instruments::{
    csi_score, nasa_tlx_raw, nasa_tlx_weighted, CsiFactor, CsiResponse, CsiScore, LikertResponse,
    TlxResponse, TlxSubscale,
};
pub use report::{build_report, read_study_csv, ExportDocument, Report, ReportRow, StudyData};
pub use ttest::{
    pooled_t_test, significance_label, summarize, t_test, t_test_from_samples, welch_t_test,
    Significance, SummaryStat, TTestResult, TestVariant,
};

/// Bundled summary statistics of the comparison study, as CSV.
pub mod study_data {
    pub const UX_SUMMARIES: &str = include_str!("../data/study_ux_summaries.csv");
    pub const TLX_SUMMARIES: &str = include_str!("../data/study_tlx_summaries.csv");
    pub const CSI_SUMMARIES: &str = include_str!("../data/study_csi_summaries.csv");
}
