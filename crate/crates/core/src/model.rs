//! Domain types shared by every updater.
//!
//! A profile is a sequence of [`SimilarityRecord`]s, one per stored day. The
//! record keeps the similar-day count and the normalised mean distance as two
//! separate numbers; the scalar profile value is always derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One day's consumption sub-pattern.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DayPattern {
    pub day_index: u32,
    pub values: Vec<f64>,
}

impl DayPattern {
    /// Builds a pattern, checking that it has at least two finite, non-negative readings.
    pub fn new(day_index: u32, values: Vec<f64>) -> Result<Self> {
        let pattern = DayPattern { day_index, values };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 2 {
            return Err(Error::invalid(format!(
                "day {} has {} readings, need at least 2",
                self.day_index,
                self.values.len()
            )));
        }
        if let Some((k, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "day {} reading {k} is {v}; readings must be finite and non-negative",
                self.day_index
            )));
        }
        Ok(())
    }
}

/// Similarity information for one stored day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRecord {
    /// Number of other stored days within the similarity threshold.
    pub count: u32,
    /// Mean distance to the other stored days divided by the maximum distance, in `[0, 1]`.
    pub norm_mean_dist: f64,
}

impl SimilarityRecord {
    pub const EMPTY: SimilarityRecord = SimilarityRecord {
        count: 0,
        norm_mean_dist: 0.0,
    };

    pub fn new(count: u32, norm_mean_dist: f64) -> Self {
        SimilarityRecord { count, norm_mean_dist }
    }

    /// The profile value: `count - norm_mean_dist`.
    pub fn sp_value(&self) -> f64 {
        f64::from(self.count) - self.norm_mean_dist
    }
}

/// Free function form of [`SimilarityRecord::sp_value`].
pub fn sp_value(rec: &SimilarityRecord) -> f64 {
    rec.sp_value()
}

/// Local alignment cost used inside the warping recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LocalCost {
    #[default]
    Absolute,
    Squared,
}

/// Half-open range of interval indices kept from each raw day.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySlice {
    pub start: usize,
    pub end: usize,
}

impl DaySlice {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if end <= start || end - start < 2 {
            return Err(Error::invalid(format!(
                "day slice {start}:{end} must keep at least two intervals"
            )));
        }
        Ok(DaySlice { start, end })
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

impl std::str::FromStr for DaySlice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("day slice {s:?} is not of the form a:b")))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid(format!("day slice bound {t:?} is not an integer")))
        };
        DaySlice::new(parse(a)?, parse(b)?)
    }
}

/// Settings of the warping distance and of per-day preprocessing.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceConfig {
    /// Sakoe-Chiba half-width in intervals; `None` leaves the warping path unconstrained.
    pub band_radius: Option<usize>,
    /// Per-interval weights on the query axis; uniform when absent.
    pub weights: Option<Vec<f64>>,
    /// Intervals kept at ingestion.
    pub day_slice: Option<DaySlice>,
    #[serde(default)]
    pub cost: LocalCost,
    /// Divide every prepared day by its own maximum reading.
    #[serde(default)]
    pub max_scale: bool,
}

impl DistanceConfig {
    /// Default band for days of length `m`: `ceil(m / 8)`.
    pub fn default_band(m: usize) -> usize {
        m.div_ceil(8)
    }

    pub fn with_band(mut self, radius: usize) -> Self {
        self.band_radius = Some(radius);
        self
    }

    pub fn with_slice(mut self, slice: DaySlice) -> Self {
        self.day_slice = Some(slice);
        self
    }

    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    /// Checks the configuration against prepared days of length `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        if let Some(r) = self.band_radius {
            if m > 0 && r > m - 1 {
                return Err(Error::invalid(format!("band radius {r} exceeds m - 1 = {}", m - 1)));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != m {
                return Err(Error::invalid(format!(
                    "{} weights given for days of length {m}",
                    w.len()
                )));
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::invalid("weights must be finite and non-negative"));
            }
            if w.iter().all(|x| *x == 0.0) {
                return Err(Error::invalid("weights must not all be zero"));
            }
        }
        Ok(())
    }

    /// Turns a raw day of readings into a stored pattern: slices, optionally
    /// max-scales, and validates.
    pub fn prepare(&self, day_index: u32, raw: &[f64]) -> Result<DayPattern> {
        let values = match self.day_slice {
            Some(s) => {
                if s.end > raw.len() {
                    return Err(Error::invalid(format!(
                        "day slice {}:{} out of range for a day of {} readings",
                        s.start,
                        s.end,
                        raw.len()
                    )));
                }
                raw[s.start..s.end].to_vec()
            }
            None => raw.to_vec(),
        };
        let mut pattern = DayPattern::new(day_index, values)?;
        if self.max_scale {
            let peak = pattern.values.iter().copied().fold(0.0, f64::max);
            if peak > 0.0 {
                pattern.values.iter_mut().for_each(|v| *v /= peak);
            }
        }
        Ok(pattern)
    }
}

/// Which stored day a full fixed-memory window gives up for the incoming one.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DropStrategy {
    /// Drop the oldest day.
    #[default]
    LowInertia,
    /// Drop the day holding the (lower) median profile value.
    MediumInertia,
    /// Drop the day with the lowest profile value.
    HighInertia,
}

impl DropStrategy {
    pub const ALL: [DropStrategy; 3] = [
        DropStrategy::LowInertia,
        DropStrategy::MediumInertia,
        DropStrategy::HighInertia,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DropStrategy::LowInertia => "low",
            DropStrategy::MediumInertia => "medium",
            DropStrategy::HighInertia => "high",
        }
    }
}

impl std::str::FromStr for DropStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" | "low-inertia" => Ok(DropStrategy::LowInertia),
            "medium" | "medium-inertia" => Ok(DropStrategy::MediumInertia),
            "high" | "high-inertia" => Ok(DropStrategy::HighInertia),
            other => Err(Error::invalid(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Thresholds and sizes shared by the updaters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileParams {
    /// Days at distance `<= threshold` are similar.
    pub threshold: f64,
    /// Codeword replaceability distance (codebook methods only).
    pub d_rep: f64,
    /// Window size of the fixed-memory method.
    pub memory: usize,
    pub strategy: DropStrategy,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            threshold: 0.0,
            d_rep: 0.0,
            memory: 15,
            strategy: DropStrategy::LowInertia,
        }
    }
}

impl ProfileParams {
    pub fn validate(&self) -> Result<()> {
        if !self.threshold.is_finite() || self.threshold < 0.0 {
            return Err(Error::invalid(format!(
                "threshold {} must be finite and non-negative",
                self.threshold
            )));
        }
        if !self.d_rep.is_finite() || self.d_rep < 0.0 {
            return Err(Error::invalid(format!(
                "d_rep {} must be finite and non-negative",
                self.d_rep
            )));
        }
        if self.memory < 2 {
            return Err(Error::invalid(format!("memory {} must be at least 2", self.memory)));
        }
        Ok(())
    }
}

/// The stored day with the highest profile value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinedMotif {
    pub pattern: DayPattern,
    pub sp_value: f64,
    /// Position in the profile at extraction time.
    pub source_index: usize,
}

/// Read access to a similarity profile and the day behind each record.
pub trait ProfileView {
    fn records(&self) -> &[SimilarityRecord];

    /// Pattern behind record `index`.
    fn pattern_at(&self, index: usize) -> &DayPattern;

    fn sp_values(&self) -> Vec<f64> {
        self.records().iter().map(SimilarityRecord::sp_value).collect()
    }
}

/// Index of the largest value, lowest index on ties. `None` when empty.
pub(crate) fn argmax(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Extracts the refined motif: the day at the profile argmax, lowest index on ties.
pub fn extract_rm(view: &impl ProfileView) -> Result<RefinedMotif> {
    let records = view.records();
    let index = argmax(records.iter().map(SimilarityRecord::sp_value))
        .ok_or_else(|| Error::invalid("cannot extract a motif from an empty profile"))?;
    Ok(RefinedMotif {
        pattern: view.pattern_at(index).clone(),
        sp_value: records[index].sp_value(),
        source_index: index,
    })
}

/// Checks that every pattern has the same length and returns it.
pub(crate) fn common_length<'a>(days: impl IntoIterator<Item = &'a DayPattern>) -> Result<usize> {
    let mut m = None;
    for d in days {
        d.validate()?;
        match m {
            None => m = Some(d.len()),
            Some(k) if k != d.len() => {
                return Err(Error::invalid(format!(
                    "day {} has {} readings, expected {k}",
                    d.day_index,
                    d.len()
                )))
            }
            _ => {}
        }
    }
    m.ok_or_else(|| Error::invalid("no days given"))
}

/// `sum / (others * d_max)`, or 0 when either factor is zero.
pub(crate) fn normalise(sum: f64, others: usize, d_max: f64) -> f64 {
    if others == 0 || d_max <= 0.0 {
        0.0
    } else {
        sum / (others as f64 * d_max)
    }
}

/// Inverse of [`normalise`].
pub(crate) fn denormalise(norm: f64, others: usize, d_max: f64) -> f64 {
    norm * others as f64 * d_max
}
