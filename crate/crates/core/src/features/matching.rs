use serde::{Deserialize, Serialize};

use super::{BinaryDescriptor, FeatureError, FeatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPair {
    pub index_a: usize,
    pub index_b: usize,
    /// Hamming distance in bits.
    pub distance: u32,
}

#[inline]
pub fn hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> u32 {
    a.0.chunks_exact(8)
        .zip(b.0.chunks_exact(8))
        .map(|(x, y)| {
            let x = u64::from_le_bytes(x.try_into().expect("8-byte chunk"));
            let y = u64::from_le_bytes(y.try_into().expect("8-byte chunk"));
            (x ^ y).count_ones()
        })
        .sum()
}

/// Reciprocal nearest neighbours over a row-major `rows x cols` distance
/// matrix. Ties pick the lowest index. Pairs with `distance >= d_max` are
/// dropped. Output is sorted by distance, then by row index.
pub fn cross_check_matrix(dist: &[u32], rows: usize, cols: usize, d_max: u32) -> Vec<MatchPair> {
    assert_eq!(dist.len(), rows * cols);
    if rows == 0 || cols == 0 {
        return Vec::new();
    }
    let argmin = |it: &mut dyn Iterator<Item = (usize, u32)>| {
        it.fold(None, |best: Option<(usize, u32)>, (i, d)| match best {
            Some((_, bd)) if bd <= d => best,
            _ => Some((i, d)),
        })
        .expect("non-empty")
    };
    let col_best: Vec<usize> = (0..cols)
        .map(|j| argmin(&mut (0..rows).map(|i| (i, dist[i * cols + j]))).0)
        .collect();
    let mut out: Vec<MatchPair> = (0..rows)
        .filter_map(|i| {
            let (j, d) = argmin(&mut (0..cols).map(|j| (j, dist[i * cols + j])));
            (col_best[j] == i && d < d_max).then_some(MatchPair {
                index_a: i,
                index_b: j,
                distance: d,
            })
        })
        .collect();
    out.sort_by_key(|m| (m.distance, m.index_a));
    out
}

/// Brute-force Hamming matching with cross-checking.
pub fn match_cross_check(a: &FeatureSet, b: &FeatureSet, d_max: u32) -> Vec<MatchPair> {
    let (da, db) = (a.descriptors(), b.descriptors());
    let mut dist = Vec::with_capacity(da.len() * db.len());
    for x in da {
        dist.extend(db.iter().map(|y| hamming(x, y)));
    }
    cross_check_matrix(&dist, da.len(), db.len(), d_max)
}

/// Fraction of the candidate's keypoints that found a valid match.
pub fn match_percentage(matches: &[MatchPair], candidate_keypoints: usize) -> Result<f64, FeatureError> {
    if candidate_keypoints == 0 {
        return Err(FeatureError::NoKeypoints);
    }
    Ok(matches.len() as f64 / candidate_keypoints as f64)
}
