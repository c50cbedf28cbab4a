//! Lossless append-only profile updates.
//!
//! Each incoming day is compared once with every stored day. Existing records
//! take one more neighbour, the new day gets its own record, and every mean is
//! rescaled to the new maximum distance. The state grows by one day per update.

use serde::{Deserialize, Serialize};

use crate::batch::{compute_similarity_profile, BatchProfile};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{denormalise, normalise, DayPattern, DistanceConfig, ProfileView, SimilarityRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdditiveState {
    pub tsd: Vec<DayPattern>,
    pub records: Vec<SimilarityRecord>,
    pub d_max: f64,
    pub threshold: f64,
    pub distance: DistanceConfig,
}

impl ProfileView for AdditiveState {
    fn records(&self) -> &[SimilarityRecord] {
        &self.records
    }

    fn pattern_at(&self, index: usize) -> &DayPattern {
        &self.tsd[index]
    }
}

/// Folds one new neighbour into records that previously had `others` neighbours.
///
/// `dist(i)` is the distance between stored day `i` and the incoming day.
pub(crate) fn absorb(
    records: &mut [SimilarityRecord],
    others: usize,
    d_max_old: f64,
    d_max_new: f64,
    threshold: f64,
    dist: impl Fn(usize) -> f64,
) {
    for (i, rec) in records.iter_mut().enumerate() {
        let d = dist(i);
        if d <= threshold {
            rec.count += 1;
        }
        let sum = denormalise(rec.norm_mean_dist, others, d_max_old) + d;
        rec.norm_mean_dist = normalise(sum, others + 1, d_max_new).min(1.0);
    }
}

impl AdditiveState {
    /// Seeds the state from a batch profile.
    pub fn from_batch(profile: BatchProfile, distance: DistanceConfig) -> Self {
        AdditiveState {
            tsd: profile.tsd,
            records: profile.records,
            d_max: profile.d_max,
            threshold: profile.threshold,
            distance,
        }
    }

    /// A one-day state: the day is its own motif with an empty record.
    pub fn seed(day: DayPattern, threshold: f64, distance: DistanceConfig) -> Result<Self> {
        day.validate()?;
        distance.validate(day.len())?;
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(Error::invalid(format!(
                "threshold {threshold} must be finite and non-negative"
            )));
        }
        Ok(AdditiveState {
            tsd: vec![day],
            records: vec![SimilarityRecord::EMPTY],
            d_max: 0.0,
            threshold,
            distance,
        })
    }

    /// Batch profile over two or more days, or a seed for a single day.
    pub fn new(days: Vec<DayPattern>, threshold: f64, distance: DistanceConfig) -> Result<Self> {
        match days.len() {
            0 => Err(Error::invalid("no days to initialise from")),
            1 => Self::seed(days.into_iter().next().unwrap(), threshold, distance),
            _ => {
                let p = compute_similarity_profile(&days, threshold, &distance)?;
                Ok(Self::from_batch(p, distance))
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tsd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tsd.is_empty()
    }

    pub fn m(&self) -> usize {
        self.tsd.first().map_or(0, DayPattern::len)
    }

    /// Appends `day`, updating every record in one pass over the stored days.
    pub fn update(&mut self, day: DayPattern) -> Result<()> {
        check_day(&day, self.m())?;
        let metric = Metric::new(&self.distance, self.m())?;
        let dists: Vec<f64> = self.tsd.iter().map(|old| metric.eval(old, &day)).collect();
        let n = self.tsd.len();
        let d_max_new = dists.iter().copied().fold(self.d_max, f64::max);

        absorb(&mut self.records, n - 1, self.d_max, d_max_new, self.threshold, |i| {
            dists[i]
        });
        let count = dists.iter().filter(|&&d| d <= self.threshold).count() as u32;
        let sum: f64 = dists.iter().sum();
        self.records
            .push(SimilarityRecord::new(count, normalise(sum, n, d_max_new).min(1.0)));
        self.tsd.push(day);
        self.d_max = d_max_new;
        Ok(())
    }

    /// Scalars held: `N*m` readings, two per record, plus the maximum distance.
    pub fn stored_scalars(&self) -> usize {
        self.len() * self.m() + 2 * self.len() + 1
    }
}

pub(crate) fn check_day(day: &DayPattern, m: usize) -> Result<()> {
    day.validate()?;
    if day.len() != m {
        return Err(Error::invalid(format!(
            "day {} has {} readings, state holds days of {m}",
            day.day_index,
            day.len()
        )));
    }
    Ok(())
}
