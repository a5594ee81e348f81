//! Two-sample t-tests from summary statistics or raw samples.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::distribution::two_sided_p;
use crate::error::{AnalyticsError, Result};

/// Sample mean, sample standard deviation (n - 1 denominator) and size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStat {
    pub mean: f64,
    pub std: f64,
    pub n: u32,
}

impl SummaryStat {
    pub fn new(mean: f64, std: f64, n: u32) -> Result<Self> {
        let stat = SummaryStat { mean, std, n };
        stat.validate()?;
        Ok(stat)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(AnalyticsError::Validation(format!(
                "sample size must be at least 2, got {}",
                self.n
            )));
        }
        if !self.std.is_finite() || self.std < 0.0 {
            return Err(AnalyticsError::Validation(format!(
                "standard deviation must be finite and non-negative, got {}",
                self.std
            )));
        }
        if !self.mean.is_finite() {
            return Err(AnalyticsError::Validation(format!(
                "mean must be finite, got {}",
                self.mean
            )));
        }
        Ok(())
    }

    fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Summarizes a sample. Requires at least two observations.
pub fn summarize(xs: &[f64]) -> Result<SummaryStat> {
    if xs.len() < 2 {
        return Err(AnalyticsError::Validation(format!(
            "need at least 2 observations, got {}",
            xs.len()
        )));
    }
    if let Some(bad) = xs.iter().find(|x| !x.is_finite()) {
        return Err(AnalyticsError::Validation(format!("non-finite observation {bad}")));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    SummaryStat::new(mean, (ss / (n - 1.0)).sqrt(), xs.len() as u32)
}

/// Significance marker using the +/*/**/*** convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Significance {
    #[serde(rename = "")]
    None,
    #[serde(rename = "+")]
    Marginal,
    #[serde(rename = "*")]
    P05,
    #[serde(rename = "**")]
    P01,
    #[serde(rename = "***")]
    P001,
}

impl Significance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Significance::None => "",
            Significance::Marginal => "+",
            Significance::P05 => "*",
            Significance::P01 => "**",
            Significance::P001 => "***",
        }
    }
}

impl fmt::Display for Significance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn significance_label(p: f64) -> Result<Significance> {
    if !(0.0..=1.0).contains(&p) {
        return Err(AnalyticsError::Validation(format!(
            "p-value must lie in [0, 1], got {p}"
        )));
    }
    Ok(if p < 0.001 {
        Significance::P001
    } else if p < 0.01 {
        Significance::P01
    } else if p < 0.05 {
        Significance::P05
    } else if p < 0.1 {
        Significance::Marginal
    } else {
        Significance::None
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestVariant {
    /// Student's test with pooled variance, `df = n1 + n2 - 2`.
    #[default]
    Pooled,
    /// Welch's unequal-variance test with Satterthwaite degrees of freedom.
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    /// Absolute value of the t statistic.
    pub t: f64,
    pub df: f64,
    pub p_two_sided: f64,
    pub label: Significance,
}

impl TTestResult {
    fn from_statistic(t: f64, df: f64) -> Result<Self> {
        let p = if t == 0.0 { 1.0 } else { two_sided_p(t, df) };
        Ok(TTestResult { t, df, p_two_sided: p, label: significance_label(p)? })
    }
}

pub fn pooled_t_test(a: &SummaryStat, b: &SummaryStat) -> Result<TTestResult> {
    a.validate()?;
    b.validate()?;
    let (n1, n2) = (a.n as f64, b.n as f64);
    let df = n1 + n2 - 2.0;
    let pooled_var = ((n1 - 1.0) * a.variance() + (n2 - 1.0) * b.variance()) / df;
    let diff = (a.mean - b.mean).abs();
    if diff == 0.0 {
        return TTestResult::from_statistic(0.0, df);
    }
    let se = (pooled_var * (1.0 / n1 + 1.0 / n2)).sqrt();
    if se == 0.0 {
        return Err(AnalyticsError::Validation(
            "both samples have zero variance but different means".into(),
        ));
    }
    TTestResult::from_statistic(diff / se, df)
}

pub fn welch_t_test(a: &SummaryStat, b: &SummaryStat) -> Result<TTestResult> {
    a.validate()?;
    b.validate()?;
    let (n1, n2) = (a.n as f64, b.n as f64);
    let va = a.variance() / n1;
    let vb = b.variance() / n2;
    let diff = (a.mean - b.mean).abs();
    if va + vb == 0.0 {
        if diff == 0.0 {
            return TTestResult::from_statistic(0.0, n1 + n2 - 2.0);
        }
        return Err(AnalyticsError::Validation(
            "both samples have zero variance but different means".into(),
        ));
    }
    let df = (va + vb).powi(2) / (va * va / (n1 - 1.0) + vb * vb / (n2 - 1.0));
    TTestResult::from_statistic(diff / (va + vb).sqrt(), df)
}

pub fn t_test(a: &SummaryStat, b: &SummaryStat, variant: TestVariant) -> Result<TTestResult> {
    match variant {
        TestVariant::Pooled => pooled_t_test(a, b),
        TestVariant::Welch => welch_t_test(a, b),
    }
}

pub fn t_test_from_samples(xs: &[f64], ys: &[f64]) -> Result<TTestResult> {
    pooled_t_test(&summarize(xs)?, &summarize(ys)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stat(mean: f64, std: f64, n: u32) -> SummaryStat {
        SummaryStat::new(mean, std, n).unwrap()
    }

    #[test]
    fn interaction_count_row() {
        let r = pooled_t_test(&stat(6.6, 2.17, 10), &stat(11.4, 6.87, 10)).unwrap();
        assert!((r.p_two_sided - 0.049).abs() <= 0.005, "p = {}", r.p_two_sided);
        assert_eq!(r.df, 18.0);
        assert_eq!(r.label, Significance::P05);
    }

    #[test]
    fn csi_score_row() {
        let r = pooled_t_test(&stat(84.6, 13.47, 10), &stat(62.9, 22.70, 10)).unwrap();
        assert!((r.p_two_sided - 0.018).abs() <= 0.005, "p = {}", r.p_two_sided);
    }

    #[test]
    fn welch_differs_on_unequal_variances() {
        let r = welch_t_test(&stat(6.6, 2.17, 10), &stat(11.4, 6.87, 10)).unwrap();
        // Satterthwaite df well below 18 pushes p up
        assert!(r.df < 11.0);
        assert!(r.p_two_sided > 0.055 && r.p_two_sided < 0.065, "p = {}", r.p_two_sided);
    }

    #[test]
    fn identical_summaries_give_unit_p() {
        let a = stat(4.2, 1.1, 10);
        let r = pooled_t_test(&a, &a).unwrap();
        assert_eq!(r.t, 0.0);
        assert_eq!(r.p_two_sided, 1.0);
        assert_eq!(r.label, Significance::None);
    }

    #[test]
    fn rejects_bad_summaries() {
        assert!(SummaryStat::new(1.0, 1.0, 1).is_err());
        assert!(SummaryStat::new(1.0, -0.1, 5).is_err());
        let bad = SummaryStat { mean: 1.0, std: 1.0, n: 1 };
        assert!(pooled_t_test(&bad, &stat(1.0, 1.0, 5)).is_err());
    }

    #[test]
    fn samples_delegate_to_summaries() {
        let xs = [3.0, 5.0, 4.0, 6.5, 2.0];
        let ys = [7.0, 8.5, 6.0, 9.0, 7.5, 10.0];
        let direct = t_test_from_samples(&xs, &ys).unwrap();
        let via = pooled_t_test(&summarize(&xs).unwrap(), &summarize(&ys).unwrap()).unwrap();
        assert_eq!(direct, via);
    }

    #[test]
    fn equal_samples_give_unit_p() {
        let xs = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(t_test_from_samples(&xs, &xs).unwrap().p_two_sided, 1.0);
    }

    #[test]
    fn far_apart_samples_are_highly_significant() {
        // t = 100 / sqrt(1 * (2/3)) ≈ 122.5, df = 4
        let r = t_test_from_samples(&[1.0, 2.0, 3.0], &[101.0, 102.0, 103.0]).unwrap();
        assert!((r.t - 122.474_487_139_158_9).abs() < 1e-9);
        assert!(r.p_two_sided < 0.001);
        assert_eq!(r.label, Significance::P001);
    }

    #[test]
    fn short_samples_rejected() {
        assert!(t_test_from_samples(&[1.0], &[1.0, 2.0]).is_err());
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn labels_follow_thresholds() {
        let cases = [
            (0.049, "*"),
            (0.096, "+"),
            (0.0006, "***"),
            (0.001, "**"),
            (0.0099, "**"),
            (0.01, "*"),
            (0.05, "+"),
            (0.1, ""),
            (1.0, ""),
            (0.0, "***"),
        ];
        for (p, label) in cases {
            assert_eq!(significance_label(p).unwrap().as_str(), label, "p = {p}");
        }
        assert!(significance_label(-0.01).is_err());
        assert!(significance_label(1.2).is_err());
        assert!(significance_label(f64::NAN).is_err());
    }
}
