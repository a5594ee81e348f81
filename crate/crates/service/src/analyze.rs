//! Turns session logs into interaction-count comparisons.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clay_analytics::{build_report, Report, StudyData, TestVariant};
use clay_core::events::LogError;
use clay_core::{SessionLog, SessionMode};
use serde::Serialize;

use crate::error::CliError;

pub const METRIC: &str = "interaction_count";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SessionCount {
    pub path: String,
    pub session_id: String,
    pub mode: SessionMode,
    pub interaction_count: usize,
}

pub fn condition(mode: SessionMode) -> &'static str {
    match mode {
        SessionMode::Clay => "clay",
        SessionMode::Baseline => "baseline",
    }
}

/// Expands directories to the `.jsonl` files inside them, sorted.
pub fn collect_logs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| CliError::Io { path: p.display().to_string(), source: e })?
                .flatten()
                .map(|e| e.path())
                .filter(|f| f.extension().is_some_and(|x| x == "jsonl"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<SessionLog, CliError> {
    let name = path.display().to_string();
    let f = File::open(path).map_err(|e| CliError::Io { path: name.clone(), source: e })?;
    SessionLog::read_from(BufReader::new(f)).map_err(|e| match e {
        LogError::Line { line, message } => CliError::Log { path: name, line, message },
        LogError::Empty => CliError::Log { path: name, line: 1, message: "log is empty".into() },
        LogError::Io(source) => CliError::Io { path: name, source },
    })
}

pub fn count_sessions(paths: &[PathBuf]) -> Result<Vec<SessionCount>, CliError> {
    if paths.is_empty() {
        return Err(CliError::Validation("no session logs given".into()));
    }
    paths
        .iter()
        .map(|p| {
            let log = read_log(p)?;
            Ok(SessionCount {
                path: p.display().to_string(),
                session_id: log.header.session_id.0.clone(),
                mode: log.header.mode,
                interaction_count: log.interaction_count(),
            })
        })
        .collect()
}

pub struct Analysis {
    pub counts: Vec<SessionCount>,
    pub report: Report,
}

impl Analysis {
    /// Per-session samples in the analytics CSV layout.
    pub fn samples_csv(&self) -> String {
        let mut out = String::from("metric,condition,participant,value\n");
        for c in &self.counts {
            out.push_str(&format!("{METRIC},{},{},{}\n", condition(c.mode), c.session_id, c.interaction_count));
        }
        out
    }
}

pub fn analyze(paths: &[PathBuf], variant: TestVariant) -> Result<Analysis, CliError> {
    let counts = count_sessions(paths)?;
    let mut data = StudyData::new();
    for c in &counts {
        data.push_sample(METRIC, condition(c.mode), c.interaction_count as f64)?;
    }
    for mode in [SessionMode::Clay, SessionMode::Baseline] {
        let n = counts.iter().filter(|c| c.mode == mode).count();
        if n < 2 {
            return Err(CliError::Validation(format!(
                "need at least two {} sessions for a comparison, found {n}",
                condition(mode)
            )));
        }
    }
    let report = build_report(&data, "clay", "baseline", variant)?;
    Ok(Analysis { counts, report })
}

/// Writes `counts.csv`, `report.txt` and `report.json` into `out`.
pub fn write_analysis(analysis: &Analysis, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io { path: out.display().to_string(), source: e })?;
    let files = [
        ("counts.csv", analysis.samples_csv()),
        ("report.txt", analysis.report.render()),
        ("report.json", analysis.report.to_json()),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let p = out.join(name);
        fs::write(&p, text).map_err(|e| CliError::Io { path: p.display().to_string(), source: e })?;
        written.push(p);
    }
    Ok(written)
}

/// Reads a summaries or samples CSV and compares its two conditions.
pub fn report_from_csv(text: &str, variant: TestVariant) -> Result<Report, CliError> {
    let data = clay_analytics::read_study_csv(text.as_bytes())?;
    let (a, b) = data.default_condition_pair()?;
    Ok(build_report(&data, &a, &b, variant)?)
}
