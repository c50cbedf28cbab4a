//! Codebook-compressed profile updates.
//!
//! Days are stored as codewords: an incoming day within `d_rep` of an existing
//! codeword is absorbed by it, otherwise it becomes a new codeword. The
//! profile itself keeps one record per day either way, so the refined motif
//! is still taken over every day seen.
//!
//! Two layouts are supported. [`CodebookLayout::WithCr`] keeps a per-day index
//! into the codebook (the compressed representation), which allows the day
//! sequence to be recovered. [`CodebookLayout::Dictionary`] keeps only an
//! occurrence count per codeword, and the records are grouped in codeword
//! blocks, so the temporal order of the days is not stored.
//!
//! Distances are evaluated once per codeword per update; days sharing a
//! codeword have identical recovered patterns and therefore identical distances.

use serde::{Deserialize, Serialize};

use crate::additive::{absorb, check_day};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::model::{normalise, DayPattern, DistanceConfig, ProfileView, SimilarityRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodebookVariant {
    WithCr,
    PatternsDictionary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "layout", rename_all = "kebab-case")]
pub enum CodebookLayout {
    /// `cr[i]` is the codeword index of day `i`; records are in day order.
    WithCr { cr: Vec<usize> },
    /// `occurrences[k]` days map to codeword `k`; records come in blocks of
    /// those sizes, in codeword order.
    Dictionary { occurrences: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodebookState {
    pub codewords: Vec<DayPattern>,
    pub layout: CodebookLayout,
    pub records: Vec<SimilarityRecord>,
    pub d_max: f64,
    pub threshold: f64,
    pub d_rep: f64,
    pub distance: DistanceConfig,
}

impl ProfileView for CodebookState {
    fn records(&self) -> &[SimilarityRecord] {
        &self.records
    }

    fn pattern_at(&self, index: usize) -> &DayPattern {
        &self.codewords[self.codeword_of(index)]
    }
}

impl CodebookState {
    /// Starts from the first day and streams the rest through [`Self::update`].
    pub fn new(
        days: Vec<DayPattern>,
        variant: CodebookVariant,
        threshold: f64,
        d_rep: f64,
        distance: DistanceConfig,
    ) -> Result<Self> {
        if !threshold.is_finite() || threshold < 0.0 {
            return Err(Error::invalid(format!(
                "threshold {threshold} must be finite and non-negative"
            )));
        }
        if !d_rep.is_finite() || d_rep < 0.0 {
            return Err(Error::invalid(format!("d_rep {d_rep} must be finite and non-negative")));
        }
        if d_rep > threshold {
            log::debug!("d_rep {d_rep} exceeds threshold {threshold}");
        }
        let mut days = days.into_iter();
        let first = days
            .next()
            .ok_or_else(|| Error::invalid("no days to initialise from"))?;
        first.validate()?;
        distance.validate(first.len())?;
        let layout = match variant {
            CodebookVariant::WithCr => CodebookLayout::WithCr { cr: vec![0] },
            CodebookVariant::PatternsDictionary => CodebookLayout::Dictionary { occurrences: vec![1] },
        };
        let mut state = CodebookState {
            codewords: vec![first],
            layout,
            records: vec![SimilarityRecord::EMPTY],
            d_max: 0.0,
            threshold,
            d_rep,
            distance,
        };
        for day in days {
            state.update(day)?;
        }
        Ok(state)
    }

    pub fn variant(&self) -> CodebookVariant {
        match self.layout {
            CodebookLayout::WithCr { .. } => CodebookVariant::WithCr,
            CodebookLayout::Dictionary { .. } => CodebookVariant::PatternsDictionary,
        }
    }

    /// Number of days represented.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Number of codewords, `W`.
    pub fn codebook_size(&self) -> usize {
        self.codewords.len()
    }

    pub fn m(&self) -> usize {
        self.codewords.first().map_or(0, DayPattern::len)
    }

    /// Days per codeword.
    pub fn occurrences(&self) -> Vec<usize> {
        match &self.layout {
            CodebookLayout::WithCr { cr } => {
                let mut occ = vec![0; self.codewords.len()];
                for &k in cr {
                    occ[k] += 1;
                }
                occ
            }
            CodebookLayout::Dictionary { occurrences } => occurrences.clone(),
        }
    }

    /// Codeword behind record `index`.
    pub fn codeword_of(&self, index: usize) -> usize {
        match &self.layout {
            CodebookLayout::WithCr { cr } => cr[index],
            CodebookLayout::Dictionary { occurrences } => {
                let mut end = 0;
                for (k, &n) in occurrences.iter().enumerate() {
                    end += n;
                    if index < end {
                        return k;
                    }
                }
                panic!("record {index} outside {end} dictionary entries")
            }
        }
    }

    /// Absorbs `day` into the profile and the codebook.
    pub fn update(&mut self, day: DayPattern) -> Result<()> {
        check_day(&day, self.m())?;
        let metric = Metric::new(&self.distance, self.m())?;
        let per_codeword: Vec<f64> = self.codewords.iter().map(|cw| metric.eval(cw, &day)).collect();
        let occ = self.occurrences();
        let n = self.records.len();
        let d_max_new = per_codeword.iter().copied().fold(self.d_max, f64::max);

        let per_record: Vec<f64> = match &self.layout {
            CodebookLayout::WithCr { cr } => cr.iter().map(|&k| per_codeword[k]).collect(),
            CodebookLayout::Dictionary { occurrences } => occurrences
                .iter()
                .zip(&per_codeword)
                .flat_map(|(&n_k, &d)| std::iter::repeat_n(d, n_k))
                .collect(),
        };
        absorb(&mut self.records, n - 1, self.d_max, d_max_new, self.threshold, |i| {
            per_record[i]
        });

        let mut count = 0u32;
        let mut sum = 0.0;
        for (&n_k, &d) in occ.iter().zip(&per_codeword) {
            sum += n_k as f64 * d;
            if d <= self.threshold {
                count += n_k as u32;
            }
        }
        let record = SimilarityRecord::new(count, normalise(sum, n, d_max_new).min(1.0));

        let replacement = replaceable(&per_codeword, self.d_rep);
        match &mut self.layout {
            CodebookLayout::WithCr { cr } => {
                let k = replacement.unwrap_or(self.codewords.len());
                cr.push(k);
                self.records.push(record);
            }
            CodebookLayout::Dictionary { occurrences } => match replacement {
                Some(p) => {
                    let end: usize = occurrences[..=p].iter().sum();
                    occurrences[p] += 1;
                    self.records.insert(end, record);
                }
                None => {
                    occurrences.push(1);
                    self.records.push(record);
                }
            },
        }
        if replacement.is_none() {
            self.codewords.push(day);
        }
        self.d_max = d_max_new;
        Ok(())
    }

    /// Units held for the day data: `W*m` readings plus one index per day
    /// (with compressed representation) or one count per codeword (dictionary).
    pub fn tsd_units(&self) -> usize {
        let w = self.codewords.len();
        let index_units = match &self.layout {
            CodebookLayout::WithCr { cr } => cr.len(),
            CodebookLayout::Dictionary { occurrences } => occurrences.len(),
        };
        w * self.m() + index_units
    }

    /// `1 - tsd_units / (N*m)`, with `N*m` the readings an additive state would hold.
    pub fn memory_saving(&self) -> f64 {
        memory_saving(self, self.len())
    }

    /// Day-data units plus two per record and the running maximum.
    pub fn stored_scalars(&self) -> usize {
        self.tsd_units() + 2 * self.len() + 1
    }
}

/// Memory saving of `state` against an additive baseline of `baseline_days` days.
pub fn memory_saving(state: &CodebookState, baseline_days: usize) -> f64 {
    let total = (baseline_days * state.m()) as f64;
    1.0 - state.tsd_units() as f64 / total
}

/// Closest codeword within `d_rep`, lowest index on ties.
fn replaceable(per_codeword: &[f64], d_rep: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &d) in per_codeword.iter().enumerate() {
        if d <= d_rep && best.is_none_or(|(_, b)| d < b) {
            best = Some((k, d));
        }
    }
    best.map(|(k, _)| k)
}

/// Expands a compressed representation back into a day sequence.
pub fn recover_tsd(codewords: &[DayPattern], cr: &[usize]) -> Result<Vec<DayPattern>> {
    cr.iter()
        .map(|&k| {
            codewords.get(k).cloned().ok_or_else(|| {
                Error::CorruptState(format!(
                    "compressed representation points at codeword {k} of {}",
                    codewords.len()
                ))
            })
        })
        .collect()
}
