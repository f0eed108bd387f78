use ndarray::Array1;

use super::{Query, Scorer, Scores};
use crate::dataset::PlaylistCorpus;
use crate::error::{Error, Result};

pub const DEFAULT_NEIGHBORS: usize = 50;

/// Similarity-weighted song histogram over the `t` training playlists most
/// cosine-similar to the query.
#[derive(Debug, Clone)]
pub struct CosineRecommender {
    rows: Vec<Vec<usize>>,
    /// Playlists containing each song.
    postings: Vec<Vec<usize>>,
    m: usize,
    t: usize,
}

impl CosineRecommender {
    pub fn new(corpus: &PlaylistCorpus, t: usize) -> Result<Self> {
        if corpus.n() == 0 {
            return Err(Error::argument("cosine baseline needs a nonempty corpus"));
        }
        if t == 0 {
            return Err(Error::argument("t must be at least 1"));
        }
        let mut postings = vec![Vec::new(); corpus.m()];
        for (i, row) in corpus.rows().iter().enumerate() {
            for &j in row {
                postings[j].push(i);
            }
        }
        Ok(Self { rows: corpus.rows().to_vec(), postings, m: corpus.m(), t })
    }
}

impl Scorer for CosineRecommender {
    fn name(&self) -> &str {
        "cosine"
    }

    fn n_songs(&self) -> usize {
        self.m
    }

    fn score(&self, query: &Query) -> Result<Scores> {
        query.validate(self.m)?;
        let mut overlap = vec![0usize; self.rows.len()];
        for &s in &query.seeds {
            for &i in &self.postings[s] {
                overlap[i] += 1;
            }
        }
        let qn = (query.seeds.len() as f64).sqrt();
        let mut sims: Vec<(usize, f64)> = overlap
            .iter()
            .enumerate()
            .filter(|(_, &o)| o > 0)
            .map(|(i, &o)| (i, o as f64 / (qn * (self.rows[i].len() as f64).sqrt())))
            .collect();
        let mut scores = Array1::zeros(self.m);
        if sims.is_empty() {
            return Ok(Scores { scores, a_in: None, a_rec: None, no_signal: true });
        }
        // Playlists with zero similarity contribute nothing, so only the
        // overlapping ones compete for the t slots.
        sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        sims.truncate(self.t);
        for (i, w) in sims {
            for &j in &self.rows[i] {
                scores[j] += w;
            }
        }
        Ok(Scores { scores, a_in: None, a_rec: None, no_signal: false })
    }
}
