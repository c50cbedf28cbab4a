//! Fleet experiments: type-switch latency, compression sweeps, classification
//! accuracy and update-cost benchmarks.
//!
//! Every driver is deterministic for a given fleet and configuration. Users
//! are processed in parallel and rows come back sorted by user id.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::batch::ThresholdRule;
use crate::classifier::{self, accuracy, ClassifierModel, Label, TrainConfig};
use crate::error::{Error, Result};
use crate::fixed::{detect_type_switch_latency, Latency};
use crate::io::synthetic::{generate_fleet, Archetype, SyntheticScenario};
use crate::model::{DayPattern, DistanceConfig, DropStrategy, ProfileParams, RefinedMotif};
use crate::updater::{Method, ProfileState, UpdaterSpec};

/// One user's day stream.
#[derive(Clone, Debug, PartialEq)]
pub struct FleetUser {
    pub id: String,
    pub days: Vec<DayPattern>,
    /// Type before any switch, if known.
    pub label: Option<Label>,
    /// First day of the other type.
    pub switch_day: Option<usize>,
}

pub fn archetype_label(a: Archetype) -> Label {
    match a {
        Archetype::Solar => Label::Positive,
        Archetype::NonSolar => Label::Negative,
    }
}

/// `per_class` solar users followed by `per_class` non-solar users, no switches.
pub fn labeled_fleet(per_class: usize, days: usize, noise: f64, seed: u64) -> Vec<FleetUser> {
    let mut out = Vec::with_capacity(2 * per_class);
    for (tag, archetype, offset) in [("s", Archetype::Solar, 0), ("n", Archetype::NonSolar, 1)] {
        let scenario = SyntheticScenario {
            archetype,
            switch_day: None,
            days,
            noise,
            seed: seed.wrapping_mul(2).wrapping_add(offset),
        };
        for (u, stream) in generate_fleet(per_class, &scenario).into_iter().enumerate() {
            out.push(FleetUser {
                id: format!("{tag}{u:04}"),
                days: stream,
                label: Some(archetype_label(archetype)),
                switch_day: None,
            });
        }
    }
    out
}

/// Users of type `from` that become the other type on `switch_day`.
pub fn switch_fleet(
    users: usize,
    days: usize,
    switch_day: Option<usize>,
    from: Archetype,
    noise: f64,
    seed: u64,
) -> Vec<FleetUser> {
    let scenario = SyntheticScenario {
        archetype: from,
        switch_day,
        days,
        noise,
        seed,
    };
    generate_fleet(users, &scenario)
        .into_iter()
        .enumerate()
        .map(|(u, stream)| FleetUser {
            id: format!("u{u:04}"),
            days: stream,
            label: Some(archetype_label(from)),
            switch_day,
        })
        .collect()
}

/// Updater settings with a per-user threshold rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSetup {
    pub method: Method,
    pub threshold: ThresholdRule,
    pub d_rep: f64,
    pub memory: usize,
    pub strategy: DropStrategy,
    pub distance: DistanceConfig,
    /// Leading days an automatic threshold is computed from.
    pub calibration_days: usize,
}

impl Default for ProfileSetup {
    fn default() -> Self {
        ProfileSetup {
            method: Method::Additive,
            threshold: ThresholdRule::Auto(ThresholdRule::DEFAULT_QUANTILE),
            d_rep: 0.0,
            memory: ProfileParams::default().memory,
            strategy: DropStrategy::LowInertia,
            distance: DistanceConfig::default(),
            calibration_days: 30,
        }
    }
}

impl ProfileSetup {
    /// The concrete updater spec for a stream starting with `days`.
    pub fn spec_for(&self, days: &[DayPattern]) -> Result<UpdaterSpec> {
        let calib = &days[..days.len().min(self.calibration_days.max(2))];
        let threshold = self.threshold.resolve(calib, &self.distance)?;
        let params = ProfileParams {
            threshold,
            d_rep: self.d_rep,
            memory: self.memory,
            strategy: self.strategy,
        };
        Ok(UpdaterSpec::new(self.method, params, self.distance.clone()))
    }

    /// Profiles the whole stream.
    pub fn build(&self, days: &[DayPattern]) -> Result<ProfileState> {
        self.spec_for(days)?.init(days.to_vec())
    }

    pub fn name(&self) -> String {
        match self.method {
            Method::Fixed => format!("fixed-{}-m{}", self.strategy.name(), self.memory),
            Method::CodebookCr | Method::CodebookPd => format!("{}-drep{}", self.method.name(), self.d_rep),
            Method::Additive => "additive".into(),
        }
    }
}

fn sorted_by_user<T>(mut rows: Vec<(String, T)>) -> Vec<(String, T)> {
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    rows
}

/// Refined motif of every user's first `days` days (all days when `None`).
pub fn fleet_motifs(
    users: &[FleetUser],
    setup: &ProfileSetup,
    days: Option<usize>,
) -> Result<Vec<(String, RefinedMotif)>> {
    let rows = users
        .par_iter()
        .map(|u| {
            let n = days.unwrap_or(u.days.len()).min(u.days.len());
            let state = setup.build(&u.days[..n])?;
            Ok((u.id.clone(), state.refined_motif()?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sorted_by_user(rows))
}

fn labeled_samples(users: &[FleetUser], motifs: &[(String, RefinedMotif)]) -> Vec<(Vec<f64>, Label)> {
    let labels: BTreeMap<&str, Label> = users
        .iter()
        .filter_map(|u| u.label.map(|l| (u.id.as_str(), l)))
        .collect();
    motifs
        .iter()
        .filter_map(|(id, rm)| labels.get(id.as_str()).map(|l| (rm.pattern.values.clone(), *l)))
        .collect()
}

/// Trains a classifier on the refined motifs of the labelled users.
pub fn train_on_fleet(users: &[FleetUser], setup: &ProfileSetup, cfg: &TrainConfig) -> Result<ClassifierModel> {
    let motifs = fleet_motifs(users, setup, None)?;
    classifier::train_vectors(&labeled_samples(users, &motifs), cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwitchRow {
    pub user: String,
    pub strategy: DropStrategy,
    pub latency: Latency,
}

/// Detection latency of every user under each drop strategy of a
/// fixed-memory updater; the threshold is calibrated on the pre-switch days.
pub fn run_switch(
    users: &[FleetUser],
    model: &ClassifierModel,
    setup: &ProfileSetup,
    strategies: &[DropStrategy],
) -> Result<Vec<SwitchRow>> {
    let mut rows = Vec::new();
    for &strategy in strategies {
        let s = ProfileSetup {
            method: Method::Fixed,
            strategy,
            ..setup.clone()
        };
        let per_user = users
            .par_iter()
            .map(|u| {
                let latency = match u.switch_day {
                    Some(k) if k > 0 && k < u.days.len() => {
                        let spec = s.spec_for(&u.days[..k])?;
                        detect_type_switch_latency(&u.days, k, model, &spec)?
                    }
                    _ => Latency::Undetected,
                };
                Ok((u.id.clone(), latency))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(sorted_by_user(per_user).into_iter().map(|(user, latency)| SwitchRow {
            user,
            strategy,
            latency,
        }));
    }
    Ok(rows)
}

/// Lower median latency of one strategy, undetected runs ranking last.
pub fn median_latency(rows: &[SwitchRow], strategy: DropStrategy) -> Option<Latency> {
    let mut v: Vec<Latency> = rows
        .iter()
        .filter(|r| r.strategy == strategy)
        .map(|r| r.latency)
        .collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by_key(|l| l.rank());
    Some(v[(v.len() - 1) / 2])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub strategy: DropStrategy,
    /// `None` counts undetected users.
    pub latency: Option<usize>,
    pub users: usize,
}

/// Users per latency value and strategy; every value from 1 to the largest
/// observed is listed, then the undetected count.
pub fn latency_histogram(rows: &[SwitchRow]) -> Vec<HistogramRow> {
    let max = rows.iter().filter_map(|r| r.latency.updates()).max().unwrap_or(0);
    let mut strategies: Vec<DropStrategy> = Vec::new();
    for r in rows {
        if !strategies.contains(&r.strategy) {
            strategies.push(r.strategy);
        }
    }
    let mut out = Vec::new();
    for s in strategies {
        let of = |l: Latency| rows.iter().filter(|r| r.strategy == s && r.latency == l).count();
        for k in 1..=max {
            out.push(HistogramRow {
                strategy: s,
                latency: Some(k),
                users: of(Latency::Detected(k)),
            });
        }
        out.push(HistogramRow {
            strategy: s,
            latency: None,
            users: of(Latency::Undetected),
        });
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionRow {
    pub user: String,
    pub d_rep: f64,
    pub days: usize,
    pub codewords: usize,
    pub tsd_units: usize,
    pub saving: f64,
}

/// Codebook size and memory saving per user, `d_rep` and stream length.
/// Streams shorter than a requested length are skipped at that length.
pub fn compression_sweep(
    users: &[FleetUser],
    setup: &ProfileSetup,
    d_reps: &[f64],
    lengths: &[usize],
) -> Result<Vec<CompressionRow>> {
    if !matches!(setup.method, Method::CodebookCr | Method::CodebookPd) {
        return Err(Error::invalid(format!(
            "compression needs a codebook method, not {}",
            setup.method.name()
        )));
    }
    let mut rows = Vec::new();
    for &days in lengths {
        for &d_rep in d_reps {
            let s = ProfileSetup { d_rep, ..setup.clone() };
            let per_user = users
                .par_iter()
                .filter(|u| u.days.len() >= days && days >= 1)
                .map(|u| {
                    let state = s.build(&u.days[..days])?;
                    let ProfileState::Codebook(cb) = &state else {
                        unreachable!("codebook method builds a codebook state")
                    };
                    Ok((
                        u.id.clone(),
                        CompressionRow {
                            user: u.id.clone(),
                            d_rep,
                            days,
                            codewords: cb.codebook_size(),
                            tsd_units: cb.tsd_units(),
                            saving: cb.memory_saving(),
                        },
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.extend(sorted_by_user(per_user).into_iter().map(|(_, r)| r));
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompressionSummary {
    pub d_rep: f64,
    pub days: usize,
    pub users: usize,
    pub min_saving: f64,
    pub max_saving: f64,
    pub mean_saving: f64,
}

/// Min, max and mean saving per (`days`, `d_rep`), in row order of first appearance.
pub fn summarise_compression(rows: &[CompressionRow]) -> Vec<CompressionSummary> {
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for r in rows {
        let k = (r.days, r.d_rep.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(days, bits)| {
            let s: Vec<f64> = rows
                .iter()
                .filter(|r| r.days == days && r.d_rep.to_bits() == bits)
                .map(|r| r.saving)
                .collect();
            CompressionSummary {
                d_rep: f64::from_bits(bits),
                days,
                users: s.len(),
                min_saving: s.iter().copied().fold(f64::INFINITY, f64::min),
                max_saving: s.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean_saving: s.iter().sum::<f64>() / s.len() as f64,
            }
        })
        .collect()
}

/// Held-out evaluation split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub test_fraction: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRow {
    pub config: String,
    pub days: usize,
    pub train_users: usize,
    pub test_users: usize,
    pub accuracy: f64,
}

/// Splits labelled user ids into (train, test); each class is shuffled and
/// split separately so both sides keep both classes where possible.
pub fn split_users(users: &[FleetUser], split: &Split) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(split.seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for class in [Label::Positive, Label::Negative] {
        let mut ids: Vec<String> = users
            .iter()
            .filter(|u| u.label == Some(class))
            .map(|u| u.id.clone())
            .collect();
        ids.sort();
        ids.shuffle(&mut rng);
        let k = ((ids.len() as f64 * split.test_fraction).round() as usize).min(ids.len().saturating_sub(1));
        test.extend(ids.drain(..k));
        train.extend(ids);
    }
    train.sort();
    test.sort();
    (train, test)
}

/// Classification accuracy of each setup's refined motifs at each stream
/// length. Without a split the score is training accuracy over every user.
pub fn accuracy_experiment(
    users: &[FleetUser],
    setups: &[ProfileSetup],
    lengths: &[usize],
    cfg: &TrainConfig,
    split: Option<&Split>,
) -> Result<Vec<AccuracyRow>> {
    let labeled: Vec<FleetUser> = users.iter().filter(|u| u.label.is_some()).cloned().collect();
    let (train_ids, test_ids) = match split {
        Some(s) => split_users(&labeled, s),
        None => {
            let ids: Vec<String> = labeled.iter().map(|u| u.id.clone()).collect();
            (ids.clone(), ids)
        }
    };
    let mut rows = Vec::new();
    for &days in lengths {
        let eligible: Vec<FleetUser> = labeled.iter().filter(|u| u.days.len() >= days).cloned().collect();
        for setup in setups {
            let motifs = fleet_motifs(&eligible, setup, Some(days))?;
            let pick = |ids: &[String]| -> Vec<(String, RefinedMotif)> {
                motifs
                    .iter()
                    .filter(|(id, _)| ids.binary_search(id).is_ok())
                    .cloned()
                    .collect()
            };
            let train = labeled_samples(&eligible, &pick(&train_ids));
            let test = labeled_samples(&eligible, &pick(&test_ids));
            if test.is_empty() {
                return Err(Error::invalid("no users to evaluate"));
            }
            let model = classifier::train_vectors(&train, cfg)?;
            rows.push(AccuracyRow {
                config: setup.name(),
                days,
                train_users: train.len(),
                test_users: test.len(),
                accuracy: accuracy(&model, &test)?,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub methods: Vec<Method>,
    pub memory: usize,
    pub strategy: DropStrategy,
    pub d_rep: f64,
    pub threshold: f64,
    pub distance: DistanceConfig,
    /// Timed updates per (method, size); the median is reported.
    pub reps: usize,
    pub noise: f64,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![100, 1000],
            methods: Method::ALL.to_vec(),
            memory: 15,
            strategy: DropStrategy::MediumInertia,
            d_rep: 1.0,
            threshold: 2.0,
            distance: DistanceConfig::default().with_band(DistanceConfig::default_band(48)),
            reps: 101,
            noise: 0.5,
            seed: 7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub method: Method,
    /// Days streamed before timing.
    pub n: usize,
    pub per_update_secs: f64,
    pub stored_scalars: usize,
    /// Largest `stored_scalars` seen while streaming the `n` days.
    pub max_stored_scalars: usize,
    /// Fraction saved against an additive state over the same days.
    pub memory_saving: f64,
}

/// Streams `n` synthetic days through each method, then times single updates
/// on copies of the resulting state.
pub fn bench_complexity(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let reps = cfg.reps.max(1);
    let warmup = 5;
    let largest = cfg.sizes.iter().copied().max().unwrap_or(0);
    let scenario = SyntheticScenario {
        archetype: Archetype::Solar,
        switch_day: None,
        days: largest + warmup + reps,
        noise: cfg.noise,
        seed: cfg.seed,
    };
    let days = crate::io::synthetic::generate_synthetic(&scenario);
    let m = days.first().map_or(0, DayPattern::len);
    let params = ProfileParams {
        threshold: cfg.threshold,
        d_rep: cfg.d_rep,
        memory: cfg.memory,
        strategy: cfg.strategy,
    };
    let mut rows = Vec::new();
    for &method in &cfg.methods {
        let spec = UpdaterSpec::new(method, params, cfg.distance.clone());
        for &n in &cfg.sizes {
            if n < 1 {
                return Err(Error::invalid("bench sizes must be positive"));
            }
            let mut state = spec.init(vec![days[0].clone()])?;
            let mut max_stored = state.stored_scalars();
            for d in &days[1..n] {
                state.update(d.clone())?;
                max_stored = max_stored.max(state.stored_scalars());
            }
            let extra = &days[largest..];
            for d in &extra[..warmup] {
                let mut s = state.clone();
                s.update(d.clone())?;
            }
            let mut times = Vec::with_capacity(reps);
            for d in &extra[warmup..warmup + reps] {
                let mut s = state.clone();
                let d = d.clone();
                let t = Instant::now();
                s.update(d)?;
                times.push(t.elapsed().as_secs_f64());
                std::hint::black_box(&s);
            }
            times.sort_by(f64::total_cmp);
            let stored = state.stored_scalars();
            rows.push(BenchRow {
                method,
                n,
                per_update_secs: times[times.len() / 2],
                stored_scalars: stored,
                max_stored_scalars: max_stored,
                memory_saving: 1.0 - stored as f64 / (n * m + 2 * n + 1) as f64,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_setup(memory: usize) -> ProfileSetup {
        ProfileSetup {
            method: Method::Fixed,
            memory,
            distance: DistanceConfig::default().with_band(6),
            ..Default::default()
        }
    }

    #[test]
    fn labeled_fleet_shape() {
        let f = labeled_fleet(3, 5, 0.2, 1);
        assert_eq!(f.len(), 6);
        assert_eq!(f.iter().filter(|u| u.label == Some(Label::Positive)).count(), 3);
        assert!(f.iter().all(|u| u.days.len() == 5));
        assert_eq!(f, labeled_fleet(3, 5, 0.2, 1));
    }

    #[test]
    fn switchless_fleet_is_never_detected() {
        let train = labeled_fleet(4, 12, 0.2, 3);
        let setup = fixed_setup(5);
        let model = train_on_fleet(&train, &setup, &TrainConfig::default()).unwrap();
        let users = switch_fleet(5, 20, None, Archetype::Solar, 0.2, 9);
        let rows = run_switch(&users, &model, &setup, &DropStrategy::ALL).unwrap();
        assert_eq!(rows.len(), 15);
        assert!(rows.iter().all(|r| r.latency == Latency::Undetected));
    }

    #[test]
    fn switch_run_is_reproducible_and_ordered() {
        let train = labeled_fleet(4, 12, 0.2, 3);
        let setup = fixed_setup(5);
        let model = train_on_fleet(&train, &setup, &TrainConfig::default()).unwrap();
        let users = switch_fleet(6, 24, Some(12), Archetype::Solar, 0.2, 9);
        let a = run_switch(&users, &model, &setup, &DropStrategy::ALL).unwrap();
        let b = run_switch(&users, &model, &setup, &DropStrategy::ALL).unwrap();
        assert_eq!(a, b);
        let ids: Vec<_> = a
            .iter()
            .filter(|r| r.strategy == DropStrategy::LowInertia)
            .map(|r| r.user.clone())
            .collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }

    #[test]
    fn histogram_counts_every_row() {
        let rows = vec![
            SwitchRow {
                user: "a".into(),
                strategy: DropStrategy::LowInertia,
                latency: Latency::Detected(2),
            },
            SwitchRow {
                user: "b".into(),
                strategy: DropStrategy::LowInertia,
                latency: Latency::Undetected,
            },
            SwitchRow {
                user: "a".into(),
                strategy: DropStrategy::HighInertia,
                latency: Latency::Detected(3),
            },
        ];
        let h = latency_histogram(&rows);
        // latencies 1..=3 plus undetected, per strategy
        assert_eq!(h.len(), 8);
        assert_eq!(h.iter().map(|r| r.users).sum::<usize>(), 3);
        assert_eq!(
            median_latency(&rows, DropStrategy::LowInertia),
            Some(Latency::Detected(2))
        );
        assert_eq!(median_latency(&rows, DropStrategy::MediumInertia), None);
    }

    #[test]
    fn median_puts_undetected_last() {
        let row = |l| SwitchRow {
            user: "x".into(),
            strategy: DropStrategy::HighInertia,
            latency: l,
        };
        let rows = vec![
            row(Latency::Undetected),
            row(Latency::Detected(9)),
            row(Latency::Undetected),
        ];
        assert_eq!(
            median_latency(&rows, DropStrategy::HighInertia),
            Some(Latency::Undetected)
        );
    }

    #[test]
    fn zero_d_rep_on_distinct_days_saves_nothing() {
        let users = switch_fleet(3, 10, None, Archetype::NonSolar, 0.5, 4);
        let setup = ProfileSetup {
            method: Method::CodebookCr,
            ..Default::default()
        };
        let rows = compression_sweep(&users, &setup, &[0.0], &[10]).unwrap();
        for r in &rows {
            assert_eq!(r.codewords, 10);
            // every day plus one index per day
            assert!((r.saving - (-1.0 / 48.0)).abs() < 1e-12);
        }
        let s = summarise_compression(&rows);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].users, 3);
    }

    #[test]
    fn huge_d_rep_keeps_one_codeword() {
        let users = switch_fleet(2, 20, None, Archetype::Solar, 0.5, 4);
        let setup = ProfileSetup {
            method: Method::CodebookPd,
            ..Default::default()
        };
        for r in compression_sweep(&users, &setup, &[1e9], &[20]).unwrap() {
            assert_eq!(r.codewords, 1);
            assert!((r.saving - (1.0 - (48.0 + 1.0) / (20.0 * 48.0))).abs() < 1e-12);
        }
    }

    #[test]
    fn split_keeps_classes_apart() {
        let users = labeled_fleet(10, 3, 0.1, 2);
        let (train, test) = split_users(
            &users,
            &Split {
                test_fraction: 0.3,
                seed: 5,
            },
        );
        assert_eq!(test.len(), 6);
        assert_eq!(train.len(), 14);
        assert!(test.iter().all(|t| !train.contains(t)));
        assert!(test.iter().any(|t| t.starts_with('s')) && test.iter().any(|t| t.starts_with('n')));
    }

    #[test]
    fn compression_rejects_non_codebook() {
        let users = switch_fleet(1, 5, None, Archetype::Solar, 0.1, 1);
        assert!(compression_sweep(&users, &ProfileSetup::default(), &[0.0], &[5]).is_err());
    }

    #[test]
    fn bench_rows_cover_methods_and_sizes() {
        let cfg = BenchConfig {
            sizes: vec![5, 20],
            reps: 3,
            ..Default::default()
        };
        let rows = bench_complexity(&cfg).unwrap();
        assert_eq!(rows.len(), 8);
        for r in &rows {
            match r.method {
                Method::Additive => assert_eq!(r.stored_scalars, r.n * 48 + 2 * r.n + 1),
                Method::Fixed => assert!(r.max_stored_scalars <= 15 * 48 + 2 * 15 + 1),
                _ => assert!(r.stored_scalars <= r.n * 48 + 3 * r.n + 1),
            }
        }
    }
}
