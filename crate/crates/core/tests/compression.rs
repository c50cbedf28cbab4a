use rmprofile::{CodebookState, CodebookVariant, DayPattern, DistanceConfig};

fn days(raw: &[[f64; 2]]) -> Vec<DayPattern> {
    raw.iter()
        .enumerate()
        .map(|(i, v)| DayPattern::new(i as u32, v.to_vec()).unwrap())
        .collect()
}

fn codebook_size(stream: &[DayPattern], d_rep: f64) -> usize {
    // band 0 on two readings makes the distance a plain L1 norm
    let cfg = DistanceConfig::default().with_band(0);
    CodebookState::new(stream.to_vec(), CodebookVariant::WithCr, 1.0, d_rep, cfg)
        .unwrap()
        .codebook_size()
}

/// A larger d_rep absorbs (1, 0) into (0, 0), which leaves the later days
/// without a nearby codeword.
#[test]
fn larger_d_rep_can_keep_more_codewords() {
    let stream = days(&[[0.0, 0.0], [1.0, 0.0], [1.55, 0.0], [1.0, 0.55]]);
    assert_eq!(codebook_size(&stream, 0.6), 2);
    assert_eq!(codebook_size(&stream, 1.0), 3);
}

#[test]
fn codebook_shrinks_with_d_rep_on_a_line() {
    let stream = days(&[[0.0, 0.0], [0.4, 0.0], [0.8, 0.0], [1.2, 0.0], [1.6, 0.0], [2.0, 0.0]]);
    let sizes: Vec<usize> = [0.0, 0.5, 0.9, 2.0]
        .iter()
        .map(|&r| codebook_size(&stream, r))
        .collect();
    assert_eq!(sizes, vec![6, 3, 2, 1]);
}
