//! Brute-force similarity profile over a whole set of days.
//!
//! Every pair of days is compared once. The result is the reference the
//! streaming updaters are checked against, and the usual way to seed them.

use serde::{Deserialize, Serialize};

use crate::distance::{profile_distances, Metric};
use crate::error::{Error, Result};
use crate::model::{common_length, normalise, DayPattern, DistanceConfig, ProfileView, SimilarityRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchProfile {
    pub records: Vec<SimilarityRecord>,
    pub d_max: f64,
    pub threshold: f64,
    pub tsd: Vec<DayPattern>,
}

impl ProfileView for BatchProfile {
    fn records(&self) -> &[SimilarityRecord] {
        &self.records
    }

    fn pattern_at(&self, index: usize) -> &DayPattern {
        &self.tsd[index]
    }
}

/// Computes the similarity profile of `tsd` with similarity threshold `threshold`.
///
/// `count_i` is the number of other days within `threshold` of day `i`, and
/// `norm_mean_dist_i` the mean distance to the other days divided by the
/// largest pairwise distance (0 when every distance is 0).
pub fn compute_similarity_profile(tsd: &[DayPattern], threshold: f64, cfg: &DistanceConfig) -> Result<BatchProfile> {
    if tsd.len() < 2 {
        return Err(Error::invalid(format!(
            "a similarity profile needs at least 2 days, got {}",
            tsd.len()
        )));
    }
    if !threshold.is_finite() || threshold < 0.0 {
        return Err(Error::invalid(format!(
            "threshold {threshold} must be finite and non-negative"
        )));
    }
    let m = common_length(tsd)?;
    let dist = profile_distances(tsd, Metric::new(cfg, m)?);
    Ok(profile_from_distances(tsd.to_vec(), &dist, threshold))
}

pub(crate) fn profile_from_distances(tsd: Vec<DayPattern>, dist: &[Vec<f64>], threshold: f64) -> BatchProfile {
    let n = tsd.len();
    let d_max = dist.iter().flat_map(|row| row.iter().copied()).fold(0.0, f64::max);
    let records = dist
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut count = 0;
            let mut sum = 0.0;
            for (j, &d) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                sum += d;
                if d <= threshold {
                    count += 1;
                }
            }
            SimilarityRecord::new(count, normalise(sum, n - 1, d_max))
        })
        .collect();
    BatchProfile {
        records,
        d_max,
        threshold,
        tsd,
    }
}

/// The `quantile` of the off-diagonal pairwise distances, nearest-rank rule.
pub fn default_threshold(tsd: &[DayPattern], cfg: &DistanceConfig, quantile: f64) -> Result<f64> {
    if tsd.len() < 2 {
        return Err(Error::invalid(format!(
            "a threshold needs at least 2 days, got {}",
            tsd.len()
        )));
    }
    let m = common_length(tsd)?;
    let dist = profile_distances(tsd, Metric::new(cfg, m)?);
    let pairs: Vec<f64> = dist
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row[i + 1..].iter().copied())
        .collect();
    nearest_rank(pairs, quantile)
}

/// How a profile's threshold is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    Fixed(f64),
    /// A quantile of the initial days' pairwise distances.
    Auto(f64),
}

impl ThresholdRule {
    pub const DEFAULT_QUANTILE: f64 = 0.3;

    pub fn resolve(&self, tsd: &[DayPattern], cfg: &DistanceConfig) -> Result<f64> {
        match *self {
            ThresholdRule::Fixed(t) if t.is_finite() && t >= 0.0 => Ok(t),
            ThresholdRule::Fixed(t) => Err(Error::invalid(format!("threshold {t} must be finite and non-negative"))),
            ThresholdRule::Auto(q) => default_threshold(tsd, cfg, q),
        }
    }
}

impl std::str::FromStr for ThresholdRule {
    type Err = Error;

    /// `auto`, `auto:<quantile>` or a non-negative distance.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("threshold {s:?} is neither auto, auto:<q> nor a number"));
        if s == "auto" {
            return Ok(ThresholdRule::Auto(Self::DEFAULT_QUANTILE));
        }
        if let Some(q) = s.strip_prefix("auto:") {
            let q: f64 = q.parse().map_err(|_| bad())?;
            if !(q > 0.0 && q < 1.0) {
                return Err(Error::invalid(format!("quantile {q} must lie in (0, 1)")));
            }
            return Ok(ThresholdRule::Auto(q));
        }
        let t: f64 = s.parse().map_err(|_| bad())?;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::invalid(format!("threshold {t} must be finite and non-negative")));
        }
        Ok(ThresholdRule::Fixed(t))
    }
}

/// Nearest-rank quantile: the smallest value with at least `q * n` values at or below it.
pub fn nearest_rank(mut values: Vec<f64>, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::invalid(format!("quantile {q} must lie in (0, 1)")));
    }
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty set"));
    }
    values.sort_by(f64::total_cmp);
    let rank = (q * values.len() as f64).ceil() as usize;
    Ok(values[rank.clamp(1, values.len()) - 1])
}
