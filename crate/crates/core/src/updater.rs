//! Method-agnostic handle over the three updaters.

use serde::{Deserialize, Serialize};

use crate::additive::AdditiveState;
use crate::codebook::{CodebookLayout, CodebookState, CodebookVariant};
use crate::error::{Error, Result};
use crate::fixed::FixedMemoryState;
use crate::model::{
    common_length, extract_rm, DayPattern, DistanceConfig, ProfileParams, ProfileView, RefinedMotif, SimilarityRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Additive,
    Fixed,
    CodebookCr,
    CodebookPd,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Additive, Method::Fixed, Method::CodebookCr, Method::CodebookPd];

    pub fn name(self) -> &'static str {
        match self {
            Method::Additive => "additive",
            Method::Fixed => "fixed",
            Method::CodebookCr => "codebook-cr",
            Method::CodebookPd => "codebook-pd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Everything needed to build a fresh updater state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdaterSpec {
    pub method: Method,
    pub params: ProfileParams,
    pub distance: DistanceConfig,
}

impl UpdaterSpec {
    pub fn new(method: Method, params: ProfileParams, distance: DistanceConfig) -> Self {
        UpdaterSpec {
            method,
            params,
            distance,
        }
    }

    /// Builds a state over `days` (at least one).
    pub fn init(&self, days: Vec<DayPattern>) -> Result<ProfileState> {
        self.params.validate()?;
        let p = &self.params;
        let d = self.distance.clone();
        Ok(match self.method {
            Method::Additive => ProfileState::Additive(AdditiveState::new(days, p.threshold, d)?),
            Method::Fixed => ProfileState::Fixed(FixedMemoryState::new(days, p.threshold, p.memory, p.strategy, d)?),
            Method::CodebookCr => ProfileState::Codebook(CodebookState::new(
                days,
                CodebookVariant::WithCr,
                p.threshold,
                p.d_rep,
                d,
            )?),
            Method::CodebookPd => ProfileState::Codebook(CodebookState::new(
                days,
                CodebookVariant::PatternsDictionary,
                p.threshold,
                p.d_rep,
                d,
            )?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum ProfileState {
    Additive(AdditiveState),
    Fixed(FixedMemoryState),
    Codebook(CodebookState),
}

impl ProfileView for ProfileState {
    fn records(&self) -> &[SimilarityRecord] {
        match self {
            ProfileState::Additive(s) => s.records(),
            ProfileState::Fixed(s) => s.records(),
            ProfileState::Codebook(s) => s.records(),
        }
    }

    fn pattern_at(&self, index: usize) -> &DayPattern {
        match self {
            ProfileState::Additive(s) => s.pattern_at(index),
            ProfileState::Fixed(s) => s.pattern_at(index),
            ProfileState::Codebook(s) => s.pattern_at(index),
        }
    }
}

impl ProfileState {
    pub fn method(&self) -> Method {
        match self {
            ProfileState::Additive(_) => Method::Additive,
            ProfileState::Fixed(_) => Method::Fixed,
            ProfileState::Codebook(s) => match s.variant() {
                CodebookVariant::WithCr => Method::CodebookCr,
                CodebookVariant::PatternsDictionary => Method::CodebookPd,
            },
        }
    }

    pub fn update(&mut self, day: DayPattern) -> Result<()> {
        match self {
            ProfileState::Additive(s) => s.update(day),
            ProfileState::Fixed(s) => s.update(day),
            ProfileState::Codebook(s) => s.update(day),
        }
    }

    pub fn refined_motif(&self) -> Result<RefinedMotif> {
        extract_rm(self)
    }

    /// Number of records in the profile.
    pub fn len(&self) -> usize {
        self.records().len()
    }

    pub fn is_empty(&self) -> bool {
        self.records().is_empty()
    }

    /// Readings per day.
    pub fn m(&self) -> usize {
        match self {
            ProfileState::Additive(s) => s.m(),
            ProfileState::Fixed(s) => s.m(),
            ProfileState::Codebook(s) => s.m(),
        }
    }

    pub fn threshold(&self) -> f64 {
        match self {
            ProfileState::Additive(s) => s.threshold,
            ProfileState::Fixed(s) => s.threshold,
            ProfileState::Codebook(s) => s.threshold,
        }
    }

    pub fn distance(&self) -> &DistanceConfig {
        match self {
            ProfileState::Additive(s) => &s.distance,
            ProfileState::Fixed(s) => &s.distance,
            ProfileState::Codebook(s) => &s.distance,
        }
    }

    /// Largest `day_index` stored, if the state keeps day indices in order.
    pub fn last_day_index(&self) -> Option<u32> {
        match self {
            ProfileState::Additive(s) => s.tsd.last().map(|d| d.day_index),
            ProfileState::Fixed(s) => s.window.iter().map(|d| d.day_index).max(),
            ProfileState::Codebook(_) => None,
        }
    }

    /// Checks the structural invariants a deserialised state must satisfy.
    pub fn check_consistent(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidState(msg));
        let (days, threshold, d_max, distance): (&[DayPattern], f64, f64, &DistanceConfig) = match self {
            ProfileState::Additive(s) => {
                if s.tsd.len() != s.records.len() {
                    return bad(format!("{} days but {} records", s.tsd.len(), s.records.len()));
                }
                (&s.tsd, s.threshold, s.d_max, &s.distance)
            }
            ProfileState::Fixed(s) => {
                if s.window.len() != s.records.len() {
                    return bad(format!("{} days but {} records", s.window.len(), s.records.len()));
                }
                if s.memory == 0 || s.window.len() > s.memory {
                    return bad(format!("window of {} exceeds memory {}", s.window.len(), s.memory));
                }
                (&s.window, s.threshold, s.d_max, &s.distance)
            }
            ProfileState::Codebook(s) => {
                let w = s.codewords.len();
                match &s.layout {
                    CodebookLayout::WithCr { cr } => {
                        if cr.len() != s.records.len() {
                            return bad(format!("{} indices but {} records", cr.len(), s.records.len()));
                        }
                        if let Some(k) = cr.iter().find(|&&k| k >= w) {
                            return bad(format!("index {k} outside codebook of {w}"));
                        }
                    }
                    CodebookLayout::Dictionary { occurrences } => {
                        if occurrences.len() != w || occurrences.iter().sum::<usize>() != s.records.len() {
                            return bad("occurrence counts do not match codebook and records".into());
                        }
                    }
                }
                if !s.d_rep.is_finite() || s.d_rep < 0.0 {
                    return bad(format!("d_rep {}", s.d_rep));
                }
                (&s.codewords, s.threshold, s.d_max, &s.distance)
            }
        };
        if days.is_empty() {
            return bad("no days".into());
        }
        let m = common_length(days)?;
        distance.validate(m)?;
        if !threshold.is_finite() || threshold < 0.0 || !d_max.is_finite() || d_max < 0.0 {
            return bad(format!("threshold {threshold}, d_max {d_max}"));
        }
        let n = self.len();
        for (i, r) in self.records().iter().enumerate() {
            if r.count as usize >= n.max(1) || !(0.0..=1.0).contains(&r.norm_mean_dist) {
                return bad(format!("record {i} out of range: {r:?}"));
            }
        }
        Ok(())
    }

    /// Scalars the state holds, by the same accounting for every method.
    pub fn stored_scalars(&self) -> usize {
        match self {
            ProfileState::Additive(s) => s.stored_scalars(),
            ProfileState::Fixed(s) => s.stored_scalars(),
            ProfileState::Codebook(s) => s.stored_scalars(),
        }
    }
}
