//! Per-metric comparison tables between two study conditions.
//!
//! Input is either raw per-participant samples or published summary
//! statistics, read from CSV with one of two headers:
//!
//! ```text
//! metric,condition,participant,value
//! metric,condition,mean,std,n
//! ```

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::io::Read;

use crate::error::{AnalyticsError, Result};
use crate::registry;
use crate::ttest::{summarize, t_test, Significance, SummaryStat, TTestResult, TestVariant};

#[derive(Debug, Clone, PartialEq)]
pub enum MetricData {
    Summary(SummaryStat),
    Samples(Vec<f64>),
}

impl MetricData {
    pub fn summary(&self) -> Result<SummaryStat> {
        match self {
            MetricData::Summary(s) => {
                s.validate()?;
                Ok(*s)
            }
            MetricData::Samples(xs) => summarize(xs),
        }
    }
}

/// Metric values keyed by (metric, condition), with first-seen ordering kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StudyData {
    metrics: Vec<String>,
    conditions: Vec<String>,
    values: HashMap<(String, String), MetricData>,
}

impl StudyData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn metrics(&self) -> &[String] {
        &self.metrics
    }

    pub fn conditions(&self) -> &[String] {
        &self.conditions
    }

    pub fn get(&self, metric: &str, condition: &str) -> Option<&MetricData> {
        self.values.get(&(metric.to_string(), condition.to_string()))
    }

    fn note(&mut self, metric: &str, condition: &str) {
        if !self.metrics.iter().any(|m| m == metric) {
            self.metrics.push(metric.to_string());
        }
        if !self.conditions.iter().any(|c| c == condition) {
            self.conditions.push(condition.to_string());
        }
    }

    pub fn insert_summary(&mut self, metric: &str, condition: &str, stat: SummaryStat) {
        self.note(metric, condition);
        self.values
            .insert((metric.to_string(), condition.to_string()), MetricData::Summary(stat));
    }

    pub fn push_sample(&mut self, metric: &str, condition: &str, value: f64) -> Result<()> {
        self.note(metric, condition);
        let entry = self
            .values
            .entry((metric.to_string(), condition.to_string()))
            .or_insert_with(|| MetricData::Samples(Vec::new()));
        match entry {
            MetricData::Samples(xs) => {
                xs.push(value);
                Ok(())
            }
            MetricData::Summary(_) => Err(AnalyticsError::Validation(format!(
                "{metric}/{condition} mixes a summary row with raw samples"
            ))),
        }
    }

    /// The two conditions to compare, CLAY-like first when names allow it.
    pub fn default_condition_pair(&self) -> Result<(String, String)> {
        if self.conditions.len() != 2 {
            return Err(AnalyticsError::Validation(format!(
                "expected exactly two conditions, found {:?}",
                self.conditions
            )));
        }
        let (a, b) = (&self.conditions[0], &self.conditions[1]);
        if a.eq_ignore_ascii_case("baseline") {
            Ok((b.clone(), a.clone()))
        } else {
            Ok((a.clone(), b.clone()))
        }
    }

    fn metric_set(&self, condition: &str) -> BTreeSet<&str> {
        self.values
            .keys()
            .filter(|(_, c)| c == condition)
            .map(|(m, _)| m.as_str())
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct SampleRow {
    metric: String,
    condition: String,
    #[allow(dead_code)]
    participant: String,
    value: f64,
}

#[derive(Debug, Deserialize)]
struct SummaryRow {
    metric: String,
    condition: String,
    mean: f64,
    std: f64,
    n: u32,
}

fn csv_error(err: csv::Error) -> AnalyticsError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    AnalyticsError::Csv { line, message: err.to_string() }
}

/// Reads a samples or summaries CSV, detected from the header row.
pub fn read_study_csv<R: Read>(reader: R) -> Result<StudyData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let has = |name: &str| headers.iter().any(|h| h == name);
    let mut data = StudyData::new();
    if has("participant") && has("value") {
        for row in rdr.deserialize::<SampleRow>() {
            let row = row.map_err(csv_error)?;
            data.push_sample(&row.metric, &row.condition, row.value)?;
        }
    } else if has("mean") && has("std") && has("n") {
        for (idx, row) in rdr.deserialize::<SummaryRow>().enumerate() {
            let row = row.map_err(csv_error)?;
            let stat = SummaryStat::new(row.mean, row.std, row.n).map_err(|e| {
                AnalyticsError::Csv { line: idx as u64 + 2, message: e.to_string() }
            })?;
            data.insert_summary(&row.metric, &row.condition, stat);
        }
    } else {
        return Err(AnalyticsError::Csv {
            line: 1,
            message: format!(
                "unrecognized header {:?}; expected metric,condition,participant,value or \
                 metric,condition,mean,std,n",
                headers.iter().collect::<Vec<_>>()
            ),
        });
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub metric: String,
    pub name: String,
    pub group: Option<String>,
    pub a: SummaryStat,
    pub b: SummaryStat,
    pub test: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub condition_a: String,
    pub condition_b: String,
    pub variant: TestVariant,
    pub rows: Vec<ReportRow>,
}

/// Flat per-row record of the machine-readable export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportRow {
    pub metric: String,
    pub name: String,
    pub group: Option<String>,
    pub mean_a: f64,
    pub std_a: f64,
    pub n_a: u32,
    pub mean_b: f64,
    pub std_b: f64,
    pub n_b: u32,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub label: Significance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportDocument {
    pub condition_a: String,
    pub condition_b: String,
    pub variant: TestVariant,
    pub rows: Vec<ExportRow>,
}

pub fn build_report(
    data: &StudyData,
    condition_a: &str,
    condition_b: &str,
    variant: TestVariant,
) -> Result<Report> {
    let set_a = data.metric_set(condition_a);
    let set_b = data.metric_set(condition_b);
    if set_a.is_empty() && set_b.is_empty() {
        return Err(AnalyticsError::Validation(format!(
            "no metrics for conditions {condition_a:?} and {condition_b:?}"
        )));
    }
    if set_a != set_b {
        let only_a: Vec<_> = set_a.difference(&set_b).collect();
        let only_b: Vec<_> = set_b.difference(&set_a).collect();
        return Err(AnalyticsError::MetricMismatch(format!(
            "only in {condition_a}: {only_a:?}; only in {condition_b}: {only_b:?}"
        )));
    }

    // registry order first, then anything unregistered in input order
    let mut ordered: Vec<&str> = registry::METRICS
        .iter()
        .map(|m| m.id)
        .filter(|id| set_a.contains(id))
        .collect();
    for m in data.metrics() {
        if set_a.contains(m.as_str()) && registry::lookup(m).is_none() {
            ordered.push(m);
        }
    }

    let mut rows = Vec::with_capacity(ordered.len());
    for metric in ordered {
        let a = data.get(metric, condition_a).expect("present in set").summary()?;
        let b = data.get(metric, condition_b).expect("present in set").summary()?;
        let test = t_test(&a, &b, variant)?;
        let def = registry::lookup(metric);
        rows.push(ReportRow {
            metric: metric.to_string(),
            name: def.map(|d| d.label.to_string()).unwrap_or_else(|| metric.to_string()),
            group: def.and_then(|d| d.group).map(str::to_string),
            a,
            b,
            test,
        });
    }
    Ok(Report {
        condition_a: condition_a.to_string(),
        condition_b: condition_b.to_string(),
        variant,
        rows,
    })
}

pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn trim_number(x: f64) -> String {
    let s = format!("{x:.3}");
    let s = s.trim_end_matches('0');
    let s = s.strip_suffix('.').map(|t| format!("{t}.0")).unwrap_or_else(|| s.to_string());
    s
}

impl Report {
    pub fn row(&self, metric: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn export(&self) -> ExportDocument {
        ExportDocument {
            condition_a: self.condition_a.clone(),
            condition_b: self.condition_b.clone(),
            variant: self.variant,
            rows: self
                .rows
                .iter()
                .map(|r| ExportRow {
                    metric: r.metric.clone(),
                    name: r.name.clone(),
                    group: r.group.clone(),
                    mean_a: r.a.mean,
                    std_a: r.a.std,
                    n_a: r.a.n,
                    mean_b: r.b.mean,
                    std_b: r.b.std,
                    n_b: r.b.n,
                    t: r.test.t,
                    df: r.test.df,
                    p: r.test.p_two_sided,
                    label: r.test.label,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.export()).expect("report serializes")
    }

    /// Renders a plain-text table: group, metric, then mean/std per
    /// condition, then p and the significance marker.
    pub fn render(&self) -> String {
        let header = [
            String::new(),
            String::new(),
            format!("{} mean", self.condition_a),
            "std".to_string(),
            format!("{} mean", self.condition_b),
            "std".to_string(),
            "p".to_string(),
            "Sig".to_string(),
        ];
        let mut body: Vec<[String; 8]> = Vec::new();
        let mut last_group: Option<&str> = None;
        for r in &self.rows {
            let group = match (r.group.as_deref(), last_group) {
                (Some(g), Some(prev)) if g == prev => String::new(),
                (Some(g), _) => g.to_string(),
                (None, _) => String::new(),
            };
            last_group = r.group.as_deref();
            body.push([
                group,
                r.name.clone(),
                trim_number(r.a.mean),
                trim_number(r.a.std),
                trim_number(r.b.mean),
                trim_number(r.b.std),
                format_p(r.test.p_two_sided),
                r.test.label.to_string(),
            ]);
        }
        let mut widths = header.clone().map(|h| h.chars().count());
        for row in &body {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let mut out = String::new();
        let line = |cells: &[String; 8], out: &mut String| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    let pad = w - c.chars().count();
                    if i < 2 {
                        format!("{}{}", c, " ".repeat(pad))
                    } else {
                        format!("{}{}", " ".repeat(pad), c)
                    }
                })
                .collect();
            let _ = writeln!(out, "| {} |", parts.join(" | "));
        };
        line(&header, &mut out);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
        for row in &body {
            line(row, &mut out);
        }
        out
    }
}
