use crate::error::{Error, Result};
use crate::recommender::rank_songs;

/// Mean percentile rank of `hidden` among all songs except `seeds`,
/// ordered by decreasing score with ties to the smaller index.
/// `0` means every hidden song came first.
pub fn mpr(scores: &[f64], seeds: &[usize], hidden: &[usize]) -> Result<f64> {
    if hidden.is_empty() {
        return Err(Error::argument("MPR needs at least one hidden song"));
    }
    let m = scores.len();
    if let Some(h) = hidden.iter().find(|h| **h >= m || seeds.contains(h)) {
        return Err(Error::argument(format!("hidden song {h} is out of range or a seed")));
    }
    let ranked = rank_songs(scores, seeds, m);
    let mut position = vec![0usize; m];
    for (p, &(j, _)) in ranked.iter().enumerate() {
        position[j] = p;
    }
    let denom = (ranked.len() - 1).max(1) as f64;
    let total: f64 = hidden.iter().map(|&h| position[h] as f64 / denom).sum();
    Ok(total / hidden.len() as f64)
}

/// Fraction of `k` slots filled with songs from `pool` (sorted).
pub fn category_accuracy(top: &[usize], k: usize, pool: &[usize]) -> Result<f64> {
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    let hits = top.iter().take(k).filter(|j| pool.binary_search(j).is_ok()).count();
    Ok(hits as f64 / k as f64)
}
