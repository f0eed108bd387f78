use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{category_accuracy, mpr};
use super::queries::{CategoryIndex, EvalQuery, QueryKind};
use crate::dataset::PlaylistCorpus;
use crate::error::{Error, Result};
use crate::recommender::{recommend, Query, Scorer, Scores};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub query_id: Option<String>,
    pub kind: QueryKind,
    pub seeds: Vec<usize>,
    pub target: String,
    /// Absent when the query has no hidden songs.
    pub mpr: Option<f64>,
    pub hits: usize,
    pub accuracy: f64,
    pub truncated: bool,
    pub no_signal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryRow {
    pub category: String,
    pub queries: usize,
    pub mpr: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub k: usize,
    pub mean_mpr: Option<f64>,
    pub mean_accuracy: f64,
    pub per_category: Vec<CategoryRow>,
    pub records: Vec<EvalRecord>,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Runs every query through `scorer` and scores the top `k` against the
/// hidden songs (MPR) and the target category's training pool (accuracy).
pub fn evaluate(scorer: &dyn Scorer, queries: &[EvalQuery], train: &PlaylistCorpus, k: usize) -> Result<EvalReport> {
    if scorer.n_songs() != train.m() {
        return Err(Error::argument(format!("scorer covers {} songs, corpus has {}", scorer.n_songs(), train.m())));
    }
    let index = CategoryIndex::new(train);
    let records = queries
        .par_iter()
        .map(|q| -> Result<EvalRecord> {
            let rec = recommend(scorer, &q.query, k)?;
            let pool = index.pool(&q.target)?;
            let top = rec.indices();
            let accuracy = category_accuracy(&top, k, pool)?;
            let mpr = if q.hidden.is_empty() {
                None
            } else {
                Some(mpr(rec.scores.as_slice().expect("contiguous"), &q.query.seeds, &q.hidden)?)
            };
            Ok(EvalRecord {
                query_id: q.query.id.clone(),
                kind: q.kind,
                seeds: q.query.seeds.clone(),
                target: q.target.clone(),
                mpr,
                hits: top.iter().filter(|j| pool.binary_search(j).is_ok()).count(),
                accuracy,
                truncated: rec.truncated,
                no_signal: rec.no_signal,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(scorer.name(), k, records))
}

/// Aggregates per-query records; queries weigh equally.
pub fn summarize(model: &str, k: usize, records: Vec<EvalRecord>) -> EvalReport {
    let mut cats: Vec<String> = records.iter().map(|r| r.target.clone()).collect();
    cats.sort();
    cats.dedup();
    let per_category = cats
        .into_iter()
        .map(|c| {
            let rs: Vec<&EvalRecord> = records.iter().filter(|r| r.target == c).collect();
            CategoryRow {
                queries: rs.len(),
                mpr: mean(rs.iter().filter_map(|r| r.mpr)),
                accuracy: mean(rs.iter().map(|r| r.accuracy)).unwrap_or(0.0),
                category: c,
            }
        })
        .collect();
    EvalReport {
        model: model.to_string(),
        k,
        mean_mpr: mean(records.iter().filter_map(|r| r.mpr)),
        mean_accuracy: mean(records.iter().map(|r| r.accuracy)).unwrap_or(0.0),
        per_category,
        records,
        metadata: serde_json::Value::Null,
    }
}

pub fn save_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// `category,model,queries,mpr,accuracy` rows, one per category, for
/// plotting.
pub fn save_category_table(reports: &[&EvalReport], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["category", "model", "queries", "mpr", "accuracy"])?;
    for r in reports {
        for row in &r.per_category {
            w.write_record([
                row.category.clone(),
                r.model.clone(),
                row.queries.to_string(),
                row.mpr.map(|v| v.to_string()).unwrap_or_default(),
                row.accuracy.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Uniform random scores, reproducible per (seed, query seeds).
#[derive(Debug, Clone)]
pub struct RandomScorer {
    m: usize,
    seed: u64,
}

impl RandomScorer {
    pub fn new(m: usize, seed: u64) -> Self {
        Self { m, seed }
    }
}

impl Scorer for RandomScorer {
    fn name(&self) -> &str {
        "random"
    }

    fn n_songs(&self) -> usize {
        self.m
    }

    fn score(&self, query: &Query) -> Result<Scores> {
        let key = query.seeds.iter().fold(self.seed, |acc, &s| rng::child_seed(acc, s as u64));
        let mut g = rng::stream(key, rng::STREAM_RANDOM_SCORES);
        let scores = (0..self.m).map(|_| g.random::<f64>()).collect();
        Ok(Scores { scores, a_in: None, a_rec: None, no_signal: false })
    }
}
