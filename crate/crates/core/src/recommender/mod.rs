//! Seed songs in, ranked songs out.

mod cosine;
mod latent;

pub use cosine::{CosineRecommender, DEFAULT_NEIGHBORS};
pub use latent::{aggregate_latent, project_query, LatentRecommender, DEFAULT_RIDGE};

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K: usize = 30;
pub const DEFAULT_SEEDS: usize = 3;

/// A handful of seed songs, optionally tagged for evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub seeds: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

impl Query {
    pub fn new(seeds: Vec<usize>) -> Self {
        Self { seeds, target: None, id: None }
    }

    /// Checks that seeds are distinct, nonempty and below `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::argument("query has no seed songs"));
        }
        if self.seeds.len() > m {
            return Err(Error::argument("more seeds than songs"));
        }
        let mut seen = vec![false; m];
        for &s in &self.seeds {
            if s >= m {
                return Err(Error::argument(format!("seed index {s} out of range for {m} songs")));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::argument(format!("duplicate seed index {s}")));
            }
        }
        Ok(())
    }
}

/// Raw scores from a [`Scorer`], before ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub scores: Array1<f64>,
    pub a_in: Option<Array1<f64>>,
    pub a_rec: Option<Array1<f64>>,
    /// The scorer had nothing to go on (e.g. no playlist shares a seed).
    pub no_signal: bool,
}

/// Anything that maps seed songs to one score per song.
pub trait Scorer: Sync {
    fn name(&self) -> &str;
    fn n_songs(&self) -> usize;
    fn score(&self, query: &Query) -> Result<Scores>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub scores: Array1<f64>,
    /// `(song index, score)` by decreasing score, ties by ascending index.
    pub top_k: Vec<(usize, f64)>,
    /// Fewer than `k` non-seed songs were available.
    pub truncated: bool,
    pub no_signal: bool,
    pub a_in: Option<Array1<f64>>,
    pub a_rec: Option<Array1<f64>>,
}

impl Recommendation {
    pub fn indices(&self) -> Vec<usize> {
        self.top_k.iter().map(|p| p.0).collect()
    }
}

/// Orders songs by decreasing score with ties to the smaller index, skipping
/// `exclude`. Returns at most `k` entries.
pub fn rank_songs(scores: &[f64], exclude: &[usize], k: usize) -> Vec<(usize, f64)> {
    let mut skip = vec![false; scores.len()];
    for &e in exclude {
        if e < skip.len() {
            skip[e] = true;
        }
    }
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&j| !skip[j]).collect();
    let cmp = |a: &usize, b: &usize| scores[*b].total_cmp(&scores[*a]).then(a.cmp(b));
    if k < idx.len() {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx.into_iter().map(|j| (j, scores[j])).collect()
}

/// Scores a query and extracts the top `k` non-seed songs.
pub fn recommend(scorer: &dyn Scorer, query: &Query, k: usize) -> Result<Recommendation> {
    if k == 0 {
        return Err(Error::argument("k must be at least 1"));
    }
    let m = scorer.n_songs();
    query.validate(m)?;
    let s = scorer.score(query)?;
    if s.scores.len() != m {
        return Err(Error::argument("scorer returned the wrong number of scores"));
    }
    if s.scores.iter().any(|v| v.is_nan()) {
        return Err(Error::Numeric { iteration: 0, message: "NaN recommendation score".into() });
    }
    let top_k = rank_songs(s.scores.as_slice().expect("contiguous"), &query.seeds, k);
    Ok(Recommendation {
        truncated: k >= m - query.seeds.len(),
        top_k,
        no_signal: s.no_signal,
        scores: s.scores,
        a_in: s.a_in,
        a_rec: s.a_rec,
    })
}
