use rand::Rng;

use crate::model::{DayPattern, SimilarityRecord};

pub fn random_days(rng: &mut impl Rng, n: usize, m: usize) -> Vec<DayPattern> {
    (0..n)
        .map(|i| DayPattern::new(i as u32, (0..m).map(|_| rng.random_range(0.0..5.0)).collect()).unwrap())
        .collect()
}

/// Days drawn around `clusters` random centres with small jitter.
pub fn clustered_days(rng: &mut impl Rng, n: usize, m: usize, clusters: usize) -> Vec<DayPattern> {
    let centres: Vec<Vec<f64>> = (0..clusters)
        .map(|_| (0..m).map(|_| rng.random_range(0.0..5.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            let c = &centres[rng.random_range(0..clusters)];
            let values = c.iter().map(|v| (v + rng.random_range(-0.1..0.1)).max(0.0)).collect();
            DayPattern::new(i as u32, values).unwrap()
        })
        .collect()
}

pub fn assert_records_close(got: &[SimilarityRecord], want: &[SimilarityRecord], rel: f64) {
    assert_eq!(got.len(), want.len());
    for (i, (a, b)) in got.iter().zip(want).enumerate() {
        assert_eq!(a.count, b.count, "count of record {i}");
        let scale = a.norm_mean_dist.abs().max(b.norm_mean_dist.abs());
        assert!(
            (a.norm_mean_dist - b.norm_mean_dist).abs() <= rel * scale,
            "mean of record {i}: {} vs {}",
            a.norm_mean_dist,
            b.norm_mean_dist
        );
    }
}

pub fn sorted_records(records: &[SimilarityRecord]) -> Vec<(u32, u64)> {
    let mut v: Vec<_> = records.iter().map(|r| (r.count, r.norm_mean_dist.to_bits())).collect();
    v.sort_unstable();
    v
}
