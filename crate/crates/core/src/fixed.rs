//! Constant-memory profile updates over a window of `M` days.
//!
//! Once the window is full, every incoming day evicts one stored day chosen by
//! a [`DropStrategy`]. Counts and means of the survivors are corrected for the
//! evicted day and the incoming one, so the window profile always equals a
//! batch profile of the window except that means stay normalised by the
//! running maximum distance, which never decreases.

use serde::{Deserialize, Serialize};

use crate::additive::{absorb, check_day};
use crate::batch::compute_similarity_profile;
use crate::classifier::{ClassifierModel, Label};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{
    argmax, denormalise, normalise, DayPattern, DistanceConfig, DropStrategy, ProfileView, SimilarityRecord,
};
use crate::updater::UpdaterSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedMemoryState {
    /// Stored days, oldest first.
    pub window: Vec<DayPattern>,
    pub records: Vec<SimilarityRecord>,
    /// Largest distance ever seen between days stored at the same time.
    pub d_max: f64,
    pub threshold: f64,
    pub memory: usize,
    pub strategy: DropStrategy,
    pub distance: DistanceConfig,
}

impl ProfileView for FixedMemoryState {
    fn records(&self) -> &[SimilarityRecord] {
        &self.records
    }

    fn pattern_at(&self, index: usize) -> &DayPattern {
        &self.window[index]
    }
}

impl FixedMemoryState {
    /// Builds a window from `days`: the first `min(len, memory)` days are
    /// profiled in batch, the rest are streamed through [`Self::update`].
    pub fn new(
        days: Vec<DayPattern>,
        threshold: f64,
        memory: usize,
        strategy: DropStrategy,
        distance: DistanceConfig,
    ) -> Result<Self> {
        if memory < 2 {
            return Err(Error::invalid(format!("memory {memory} must be at least 2")));
        }
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(Error::invalid(format!(
                "threshold {threshold} must be finite and non-negative"
            )));
        }
        let mut days = days.into_iter();
        let seed: Vec<_> = days.by_ref().take(memory).collect();
        let mut state = match seed.len() {
            0 => return Err(Error::invalid("no days to initialise from")),
            1 => {
                let day = seed.into_iter().next().unwrap();
                day.validate()?;
                distance.validate(day.len())?;
                FixedMemoryState {
                    window: vec![day],
                    records: vec![SimilarityRecord::EMPTY],
                    d_max: 0.0,
                    threshold,
                    memory,
                    strategy,
                    distance,
                }
            }
            _ => {
                let p = compute_similarity_profile(&seed, threshold, &distance)?;
                FixedMemoryState {
                    window: p.tsd,
                    records: p.records,
                    d_max: p.d_max,
                    threshold,
                    memory,
                    strategy,
                    distance,
                }
            }
        };
        for day in days {
            state.update(day)?;
        }
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.window.len() >= self.memory
    }

    pub fn m(&self) -> usize {
        self.window.first().map_or(0, DayPattern::len)
    }

    /// Window position the strategy would evict next.
    pub fn select_drop_index(&self) -> Result<usize> {
        if !self.is_full() {
            return Err(Error::InvalidState(format!(
                "window holds {} of {} days; nothing is dropped before it fills",
                self.window.len(),
                self.memory
            )));
        }
        Ok(select_drop(self.strategy, &self.sp_values()))
    }

    /// Adds `day`, evicting one stored day first when the window is full.
    pub fn update(&mut self, day: DayPattern) -> Result<()> {
        check_day(&day, self.m())?;
        let metric = Metric::new(&self.distance, self.m())?;
        if !self.is_full() {
            let dists: Vec<f64> = self.window.iter().map(|d| metric.eval(d, &day)).collect();
            self.grow(day, &dists);
            return Ok(());
        }

        let k = self.select_drop_index()?;
        let out = self.window.remove(k);
        self.records.remove(k);
        let others = self.window.len();

        let d_out: Vec<f64> = self
            .window
            .iter()
            .enumerate()
            .map(|(i, d)| {
                if i < k {
                    metric.eval(d, &out)
                } else {
                    metric.eval(&out, d)
                }
            })
            .collect();
        let d_in: Vec<f64> = self.window.iter().map(|d| metric.eval(d, &day)).collect();
        let d_max_new = d_in.iter().copied().fold(self.d_max, f64::max);

        for (i, rec) in self.records.iter_mut().enumerate() {
            if d_out[i] <= self.threshold {
                rec.count -= 1;
            }
            if d_in[i] <= self.threshold {
                rec.count += 1;
            }
            let sum = denormalise(rec.norm_mean_dist, others, self.d_max) - d_out[i] + d_in[i];
            rec.norm_mean_dist = normalise(sum.max(0.0), others, d_max_new).min(1.0);
        }
        let count = d_in.iter().filter(|&&d| d <= self.threshold).count() as u32;
        let sum: f64 = d_in.iter().sum();
        self.records
            .push(SimilarityRecord::new(count, normalise(sum, others, d_max_new).min(1.0)));
        self.window.push(day);
        self.d_max = d_max_new;
        Ok(())
    }

    fn grow(&mut self, day: DayPattern, dists: &[f64]) {
        let n = self.window.len();
        let d_max_new = dists.iter().copied().fold(self.d_max, f64::max);
        absorb(&mut self.records, n - 1, self.d_max, d_max_new, self.threshold, |i| {
            dists[i]
        });
        let count = dists.iter().filter(|&&d| d <= self.threshold).count() as u32;
        let sum: f64 = dists.iter().sum();
        self.records
            .push(SimilarityRecord::new(count, normalise(sum, n, d_max_new).min(1.0)));
        self.window.push(day);
        self.d_max = d_max_new;
    }

    /// Scalars held: `|window|*m` readings, two per record, plus the running maximum.
    pub fn stored_scalars(&self) -> usize {
        self.len() * self.m() + 2 * self.len() + 1
    }
}

/// Index to evict from a full window whose profile values (oldest first) are `sp`.
///
/// Ties among equal values go to the oldest day.
pub fn select_drop(strategy: DropStrategy, sp: &[f64]) -> usize {
    match strategy {
        DropStrategy::LowInertia => 0,
        DropStrategy::HighInertia => argmax(sp.iter().map(|v| -v)).unwrap_or(0),
        DropStrategy::MediumInertia => {
            let mut sorted = sp.to_vec();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[(sorted.len() - 1) / 2];
            sp.iter().position(|v| *v == median).unwrap_or(0)
        }
    }
}

/// Outcome of a switch-detection run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Latency {
    /// Label flipped after this many post-switch updates (1 = right after the first).
    Detected(usize),
    Undetected,
}

impl Latency {
    pub fn updates(self) -> Option<usize> {
        match self {
            Latency::Detected(n) => Some(n),
            Latency::Undetected => None,
        }
    }

    /// Sort key with undetected runs after every detected one.
    pub fn rank(self) -> usize {
        self.updates().unwrap_or(usize::MAX)
    }
}

/// Counts updates after `switch_day` until the classifier's label of the
/// refined motif differs from its label just before the switch.
///
/// The state is built by `spec` from the days before `switch_day`; every
/// later day is one update.
pub fn detect_type_switch_latency(
    stream: &[DayPattern],
    switch_day: usize,
    classifier: &ClassifierModel,
    spec: &UpdaterSpec,
) -> Result<Latency> {
    if !classifier.is_trained() {
        return Err(Error::InvalidState("classifier has not been trained".into()));
    }
    if switch_day == 0 {
        return Err(Error::invalid(
            "switch day must leave at least one day before the switch",
        ));
    }
    if switch_day >= stream.len() {
        return Ok(Latency::Undetected);
    }
    let mut state = spec.init(stream[..switch_day].to_vec())?;
    let label_of =
        |state: &crate::updater::ProfileState| -> Result<Label> { Ok(classifier.predict(&state.refined_motif()?)?.1) };
    let before = label_of(&state)?;
    for (t, day) in stream[switch_day..].iter().enumerate() {
        state.update(day.clone())?;
        if label_of(&state)? != before {
            return Ok(Latency::Detected(t + 1));
        }
    }
    Ok(Latency::Undetected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::batch::compute_similarity_profile;
    use crate::testutil::random_days;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn day(i: u32, v: &[f64]) -> DayPattern {
        DayPattern::new(i, v.to_vec()).unwrap()
    }

    #[test]
    fn drop_index_examples() {
        let sp = [0.5, 2.1, -0.3];
        assert_eq!(select_drop(DropStrategy::LowInertia, &sp), 0);
        assert_eq!(select_drop(DropStrategy::HighInertia, &sp), 2);
        assert_eq!(select_drop(DropStrategy::MediumInertia, &sp), 0);
    }

    #[test]
    fn drop_ties_go_to_oldest() {
        assert_eq!(select_drop(DropStrategy::HighInertia, &[1.0, 0.0, 0.0]), 1);
        // lower median of an even window
        assert_eq!(select_drop(DropStrategy::MediumInertia, &[4.0, 3.0, 2.0, 1.0]), 2);
        assert_eq!(select_drop(DropStrategy::MediumInertia, &[2.0, 2.0, 1.0, 2.0]), 0);
    }

    #[test]
    fn select_requires_full_window() {
        let s = FixedMemoryState::new(
            vec![day(0, &[0.0, 1.0]), day(1, &[1.0, 0.0])],
            1.0,
            3,
            DropStrategy::LowInertia,
            DistanceConfig::default(),
        )
        .unwrap();
        assert!(matches!(s.select_drop_index(), Err(Error::InvalidState(_))));
    }

    #[test]
    fn two_day_window_example() {
        let mut s = FixedMemoryState::new(
            vec![day(0, &[0.0, 0.0]), day(1, &[10.0, 10.0])],
            5.0,
            2,
            DropStrategy::LowInertia,
            DistanceConfig::default(),
        )
        .unwrap();
        s.update(day(2, &[0.0, 0.0])).unwrap();
        assert_eq!(s.window[0].values, vec![10.0, 10.0]);
        assert_eq!(s.window[1].values, vec![0.0, 0.0]);
        assert_eq!(s.records.iter().map(|r| r.count).collect::<Vec<_>>(), vec![0, 0]);
        assert_eq!(s.d_max, 20.0);
    }

    #[test]
    fn d_max_survives_eviction_of_its_pair() {
        let mut s = FixedMemoryState::new(
            vec![day(0, &[0.0, 0.0]), day(1, &[10.0, 10.0])],
            5.0,
            2,
            DropStrategy::LowInertia,
            DistanceConfig::default(),
        )
        .unwrap();
        s.update(day(2, &[9.0, 9.0])).unwrap();
        s.update(day(3, &[9.5, 9.5])).unwrap();
        assert_eq!(s.d_max, 20.0);
        assert_eq!(s.records[0].norm_mean_dist, 1.0 / 20.0);
    }

    #[test]
    fn identical_incoming_day_counts_as_similar() {
        for strategy in DropStrategy::ALL {
            let days = vec![day(0, &[1.0, 1.0]), day(1, &[5.0, 1.0]), day(2, &[9.0, 0.0])];
            let mut s = FixedMemoryState::new(days.clone(), 0.5, 4, strategy, DistanceConfig::default()).unwrap();
            let before = s.records[1].count;
            s.update(day(3, &days[1].values)).unwrap();
            assert_eq!(s.records[1].count, before + 1);
        }
    }

    /// Window profile with means normalised by a pinned maximum distance.
    fn pinned_window_profile(s: &FixedMemoryState) -> Vec<SimilarityRecord> {
        let p = compute_similarity_profile(&s.window, s.threshold, &s.distance).unwrap();
        let n = s.window.len();
        p.records
            .iter()
            .map(|r| {
                let sum = r.norm_mean_dist * (n - 1) as f64 * p.d_max;
                SimilarityRecord::new(r.count, sum / ((n - 1) as f64 * s.d_max))
            })
            .collect()
    }

    #[test]
    fn forty_day_streams_match_window_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let cfg = DistanceConfig::default().with_band(2);
        let days = random_days(&mut rng, 40, 8);
        let th = crate::batch::default_threshold(&days, &cfg, 0.3).unwrap();
        for strategy in DropStrategy::ALL {
            let mut s = FixedMemoryState::new(days[..2].to_vec(), th, 10, strategy, cfg.clone()).unwrap();
            for d in &days[2..] {
                s.update(d.clone()).unwrap();
                let oracle = pinned_window_profile(&s);
                let counts: Vec<_> = s.records.iter().map(|r| r.count).collect();
                let want: Vec<_> = oracle.iter().map(|r| r.count).collect();
                assert_eq!(counts, want);
                for (a, b) in s.records.iter().zip(&oracle) {
                    assert!((a.norm_mean_dist - b.norm_mean_dist).abs() <= 1e-9);
                }
                assert_eq!(
                    argmax(s.sp_values()),
                    argmax(oracle.iter().map(SimilarityRecord::sp_value))
                );
                assert!(s.len() <= 10);
                assert!(s.stored_scalars() <= 10 * 8 + 2 * 10 + 1);
            }
            assert_eq!(s.len(), 10);
        }
    }
}
