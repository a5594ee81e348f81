//! NASA-TLX and Creativity Support Index scoring in exact rational arithmetic.

use num_rational::Rational64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{AnalyticsError, Result};

/// Number of paired comparisons among six dimensions.
pub const PAIRED_COMPARISONS: i64 = 15;

/// The six NASA-TLX subscales, in their conventional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TlxSubscale {
    Mental,
    Physical,
    Temporal,
    Effort,
    Performance,
    Frustration,
}

impl TlxSubscale {
    pub const ALL: [TlxSubscale; 6] = [
        TlxSubscale::Mental,
        TlxSubscale::Physical,
        TlxSubscale::Temporal,
        TlxSubscale::Effort,
        TlxSubscale::Performance,
        TlxSubscale::Frustration,
    ];
}

/// The six CSI factors, in their conventional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsiFactor {
    Enjoyment,
    Exploration,
    Expressiveness,
    Immersion,
    ResultsWorthEffort,
    Collaboration,
}

impl CsiFactor {
    pub const ALL: [CsiFactor; 6] = [
        CsiFactor::Enjoyment,
        CsiFactor::Exploration,
        CsiFactor::Expressiveness,
        CsiFactor::Immersion,
        CsiFactor::ResultsWorthEffort,
        CsiFactor::Collaboration,
    ];
}

/// All 15 unordered pairs of six dimensions, by index.
pub fn comparison_pairs() -> impl Iterator<Item = (usize, usize)> {
    (0..6).flat_map(|i| ((i + 1)..6).map(move |j| (i, j)))
}

/// Tallies the winners of the 15 paired comparisons into per-dimension counts.
///
/// `winners[k]` must be one of the two members of the `k`-th pair in
/// [`comparison_pairs`] order.
pub fn tally_comparisons(winners: &[usize]) -> Result<[u8; 6]> {
    if winners.len() != PAIRED_COMPARISONS as usize {
        return Err(AnalyticsError::Validation(format!(
            "expected {PAIRED_COMPARISONS} comparison winners, got {}",
            winners.len()
        )));
    }
    let mut counts = [0u8; 6];
    for ((i, j), &w) in comparison_pairs().zip(winners) {
        if w != i && w != j {
            return Err(AnalyticsError::Validation(format!(
                "winner {w} is not part of comparison ({i}, {j})"
            )));
        }
        counts[w] += 1;
    }
    Ok(counts)
}

fn validate_counts(counts: &[u8; 6], what: &str) -> Result<()> {
    let total: i64 = counts.iter().map(|&c| c as i64).sum();
    if total != PAIRED_COMPARISONS {
        return Err(AnalyticsError::Validation(format!(
            "{what} must sum to {PAIRED_COMPARISONS}, got {total}"
        )));
    }
    if let Some(c) = counts.iter().find(|&&c| c > 5) {
        return Err(AnalyticsError::Validation(format!(
            "{what} entries lie in [0, 5], got {c}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TlxResponse {
    /// Ratings in [0, 100], ordered as [`TlxSubscale::ALL`].
    pub ratings: [Rational64; 6],
    /// Comparison tallies per subscale; required for the weighted score.
    pub weights: Option<[u8; 6]>,
}

impl TlxResponse {
    pub fn new(ratings: [Rational64; 6], weights: Option<[u8; 6]>) -> Result<Self> {
        let r = TlxResponse { ratings, weights };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let hundred = Rational64::from_integer(100);
        for (s, r) in TlxSubscale::ALL.iter().zip(&self.ratings) {
            if *r < Rational64::zero() || *r > hundred {
                return Err(AnalyticsError::Validation(format!(
                    "{s:?} rating {r} outside [0, 100]"
                )));
            }
        }
        if let Some(w) = &self.weights {
            validate_counts(w, "TLX weights")?;
        }
        Ok(())
    }

    pub fn rating(&self, subscale: TlxSubscale) -> Rational64 {
        let idx = TlxSubscale::ALL.iter().position(|s| *s == subscale).unwrap();
        self.ratings[idx]
    }
}

/// Raw TLX: the unweighted mean of the six subscales.
pub fn nasa_tlx_raw(r: &TlxResponse) -> Result<Rational64> {
    r.validate()?;
    let sum: Rational64 = r.ratings.iter().copied().sum();
    Ok(sum / Rational64::from_integer(6))
}

/// Weighted TLX: each rating times its comparison tally, over 15.
pub fn nasa_tlx_weighted(r: &TlxResponse) -> Result<Rational64> {
    r.validate()?;
    let weights = r.weights.ok_or_else(|| {
        AnalyticsError::Validation("weighted TLX requires paired-comparison weights".into())
    })?;
    let sum: Rational64 = r
        .ratings
        .iter()
        .zip(weights)
        .map(|(rating, w)| rating * Rational64::from_integer(w as i64))
        .sum();
    Ok(sum / Rational64::from_integer(PAIRED_COMPARISONS))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsiResponse {
    /// Two item scores in [0, 10] per factor, ordered as [`CsiFactor::ALL`].
    pub items: [[u8; 2]; 6],
    /// Paired-comparison tallies per factor.
    pub pair_counts: [u8; 6],
}

impl CsiResponse {
    pub fn new(items: [[u8; 2]; 6], pair_counts: [u8; 6]) -> Result<Self> {
        let r = CsiResponse { items, pair_counts };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        for (f, pair) in CsiFactor::ALL.iter().zip(&self.items) {
            if pair.iter().any(|&v| v > 10) {
                return Err(AnalyticsError::Validation(format!(
                    "{f:?} item scores {pair:?} outside [0, 10]"
                )));
            }
        }
        validate_counts(&self.pair_counts, "CSI pair counts")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsiScore {
    /// Weighted total in [0, 100].
    pub total: Rational64,
    /// Per-factor display score (factor sum × 5), each in [0, 100].
    pub per_factor: [Rational64; 6],
}

pub fn csi_score(r: &CsiResponse) -> Result<CsiScore> {
    r.validate()?;
    let factor_scores = r.items.map(|[a, b]| a as i64 + b as i64);
    let weighted: i64 = factor_scores
        .iter()
        .zip(r.pair_counts)
        .map(|(score, count)| score * count as i64)
        .sum();
    Ok(CsiScore {
        total: Rational64::new(weighted, 3),
        per_factor: factor_scores.map(|s| Rational64::from_integer(s * 5)),
    })
}

/// A 7-point agreement item (1 = strongly disagree, 7 = strongly agree).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertResponse {
    pub item: String,
    pub value: u8,
}

impl LikertResponse {
    pub fn new(item: impl Into<String>, value: u8) -> Result<Self> {
        let item = item.into();
        if !(1..=7).contains(&value) {
            return Err(AnalyticsError::Validation(format!(
                "likert value for {item} must be in [1, 7], got {value}"
            )));
        }
        Ok(LikertResponse { item, value })
    }
}
