//! Weighted dynamic time warping between daily sub-patterns.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{common_length, DayPattern, DistanceConfig, LocalCost};

/// Minimum cumulative warping cost between `a` and `b`.
///
/// The local cost of aligning `a[i]` with `b[j]` is `weights[i] * |a[i] - b[j]|`
/// (or the squared difference), and the path is confined to `|i - j| <= band`
/// when a band is given. Lengths may differ; the result is `+inf` when the band
/// admits no path.
pub(crate) fn warp_cost(a: &[f64], b: &[f64], weights: Option<&[f64]>, band: Option<usize>, cost: LocalCost) -> f64 {
    let (n, k) = (a.len(), b.len());
    if n == 0 || k == 0 {
        return if n == k { 0.0 } else { f64::INFINITY };
    }
    let mut prev = vec![f64::INFINITY; k + 1];
    let mut cur = vec![f64::INFINITY; k + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur.fill(f64::INFINITY);
        let (lo, hi) = match band {
            Some(r) => (i.saturating_sub(r).max(1), (i + r).min(k)),
            None => (1, k),
        };
        let w = weights.map_or(1.0, |w| w[i - 1]);
        let x = a[i - 1];
        for j in lo..=hi {
            let diff = x - b[j - 1];
            let local = match cost {
                LocalCost::Absolute => diff.abs(),
                LocalCost::Squared => diff * diff,
            };
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = w * local + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[k]
}

/// Distance evaluator bound to a validated configuration and day length.
///
/// The updaters call this in their inner loops; inputs are assumed to have
/// been checked against the state's day length beforehand.
#[derive(Clone, Copy, Debug)]
pub struct Metric<'a> {
    cfg: &'a DistanceConfig,
}

impl<'a> Metric<'a> {
    pub fn new(cfg: &'a DistanceConfig, m: usize) -> Result<Self> {
        cfg.validate(m)?;
        Ok(Metric { cfg })
    }

    /// Distance with `query` on the weighted axis.
    pub fn eval(&self, query: &DayPattern, other: &DayPattern) -> f64 {
        warp_cost(
            &query.values,
            &other.values,
            self.cfg.weights.as_deref(),
            self.cfg.band_radius,
            self.cfg.cost,
        )
    }
}

/// Warping distance between two days of equal length.
pub fn dtw_distance(a: &DayPattern, b: &DayPattern, cfg: &DistanceConfig) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {} readings",
            a.len(),
            b.len()
        )));
    }
    a.validate()?;
    b.validate()?;
    Ok(Metric::new(cfg, a.len())?.eval(a, b))
}

/// Full `N x N` matrix with entry `(i, j) = dtw_distance(day_i, day_j)`.
///
/// Symmetric when the weights are uniform. Each cell is computed
/// independently, so the parallel schedule does not affect the result.
pub fn pairwise_distance_matrix(tsd: &[DayPattern], cfg: &DistanceConfig) -> Result<Vec<Vec<f64>>> {
    if tsd.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 days for a distance matrix, got {}",
            tsd.len()
        )));
    }
    let m = common_length(tsd)?;
    let metric = Metric::new(cfg, m)?;
    Ok(tsd
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            tsd.iter()
                .enumerate()
                .map(|(j, b)| if i == j { 0.0 } else { metric.eval(a, b) })
                .collect()
        })
        .collect())
}

/// Symmetric matrix used by the profile: the pair `(i, j)` is measured with
/// the earlier day as the query, matching the order in which the streaming
/// updaters see pairs.
pub(crate) fn profile_distances(tsd: &[DayPattern], metric: Metric<'_>) -> Vec<Vec<f64>> {
    let n = tsd.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| metric.eval(&tsd[i], &tsd[j])).collect())
        .collect();
    let mut full = vec![vec![0.0; n]; n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &d) in row.iter().enumerate() {
            let j = i + 1 + off;
            full[i][j] = d;
            full[j][i] = d;
        }
    }
    full
}
