use std::collections::{BTreeMap, HashMap};

use ndarray::ArrayView2;
use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::WeightedGraph;
use crate::dataset::{PlaylistCorpus, SongFeatures};
use crate::error::{Error, Result};
use crate::rng;

/// Cosine similarity of two binary vectors given as sorted support indices:
/// `|p ∩ q| / sqrt(|p| |q|)`.
pub fn cosine_similarity(p: &[usize], q: &[usize]) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::argument("cosine similarity of a zero vector"));
    }
    let (mut a, mut b, mut common) = (0, 0, 0usize);
    while a < p.len() && b < q.len() {
        match p[a].cmp(&q[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                common += 1;
                a += 1;
                b += 1;
            }
        }
    }
    Ok(common as f64 / ((p.len() * q.len()) as f64).sqrt())
}

/// Playlist graph weights `γ₁ δ(same category, retained) + γ₂ cos(C_i, C_i')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaylistGraphConfig {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Fraction of same-category pairs that receive the category term.
    pub category_edge_fraction: f64,
    pub seed: u64,
    /// Keep only each node's `q` strongest edges (an edge survives if either
    /// endpoint keeps it). `None` keeps everything.
    pub top_q: Option<usize>,
}

impl Default for PlaylistGraphConfig {
    fn default() -> Self {
        Self { gamma1: 0.3, gamma2: 0.7, category_edge_fraction: 0.2, seed: 0, top_q: None }
    }
}

pub fn build_playlist_graph(corpus: &PlaylistCorpus, cfg: &PlaylistGraphConfig) -> Result<WeightedGraph> {
    let (g1, g2) = (cfg.gamma1, cfg.gamma2);
    if g1 < 0.0 || g2 < 0.0 || (g1 + g2 - 1.0).abs() > 1e-12 {
        return Err(Error::argument(format!("gamma1 and gamma2 must be non-negative and sum to 1, got {g1} and {g2}")));
    }
    if !(0.0..=1.0).contains(&cfg.category_edge_fraction) {
        return Err(Error::argument("category edge fraction outside [0, 1]"));
    }
    let n = corpus.n();

    // Songs → playlists, for co-occurrence counts.
    let mut postings: Vec<Vec<usize>> = vec![Vec::new(); corpus.m()];
    for (i, j) in corpus.entries() {
        postings[j].push(i);
    }
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut common = vec![0usize; n];
    for i in 0..n {
        let mut touched = Vec::new();
        for &j in corpus.row(i) {
            for &i2 in &postings[j] {
                if i2 > i {
                    if common[i2] == 0 {
                        touched.push(i2);
                    }
                    common[i2] += 1;
                }
            }
        }
        let li = corpus.row(i).len() as f64;
        for i2 in touched {
            let cos = common[i2] as f64 / (li * corpus.row(i2).len() as f64).sqrt();
            common[i2] = 0;
            if g2 > 0.0 {
                weights.insert((i, i2), g2 * cos);
            }
        }
    }

    if g1 > 0.0 {
        let mut pairs = Vec::new();
        let cats = corpus.categories();
        for i in 0..n {
            for i2 in i + 1..n {
                if cats[i] == cats[i2] {
                    pairs.push((i, i2));
                }
            }
        }
        let keep = (cfg.category_edge_fraction * pairs.len() as f64).round() as usize;
        let mut rng = rng::stream(cfg.seed, rng::STREAM_PLAYLIST_GRAPH);
        let mut chosen = index::sample(&mut rng, pairs.len(), keep).into_vec();
        chosen.sort_unstable();
        for k in chosen {
            *weights.entry(pairs[k]).or_default() += g1;
        }
    }

    let mut edges: Vec<(usize, usize, f64)> =
        weights.into_iter().filter(|&(_, w)| w > 0.0).map(|((u, v), w)| (u, v, w)).collect();
    if let Some(q) = cfg.top_q {
        edges = cap_per_node(n, edges, q);
    }
    WeightedGraph::new(n, edges)
}

fn cap_per_node(n: usize, edges: Vec<(usize, usize, f64)>, q: usize) -> Vec<(usize, usize, f64)> {
    let mut per_node: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, &(u, v, _)) in edges.iter().enumerate() {
        per_node[u].push(e);
        per_node[v].push(e);
    }
    let mut keep = vec![false; edges.len()];
    for list in &mut per_node {
        list.sort_by(|&a, &b| edges[b].2.total_cmp(&edges[a].2).then(a.cmp(&b)));
        for &e in list.iter().take(q) {
            keep[e] = true;
        }
    }
    edges.into_iter().zip(keep).filter_map(|(e, k)| k.then_some(e)).collect()
}

/// Song similarity graph over standardized features; see
/// [`build_knn_graph`].
pub fn build_song_graph(features: &SongFeatures, k: usize) -> Result<WeightedGraph> {
    build_knn_graph(features.matrix.view(), k)
}

/// Symmetrized k-nearest-neighbor graph under the L1 distance with weights
/// `exp(−d / σ)`, where σ is the mean distance from each point to its k-th
/// neighbor. Distance ties go to the smaller index.
pub fn build_knn_graph(points: ArrayView2<f64>, k: usize) -> Result<WeightedGraph> {
    let m = points.nrows();
    if k == 0 || m <= k {
        return Err(Error::argument(format!("kNN graph needs 1 <= k < points, got k={k} with {m} points")));
    }
    let neighbors: Vec<Vec<(f64, usize)>> = (0..m)
        .into_par_iter()
        .map(|j| {
            let xj = points.row(j);
            let mut dists: Vec<(f64, usize)> = (0..m)
                .filter(|&o| o != j)
                .map(|o| {
                    let d: f64 = xj.iter().zip(points.row(o)).map(|(a, b)| (a - b).abs()).sum();
                    (d, o)
                })
                .collect();
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            dists.select_nth_unstable_by(k - 1, cmp);
            dists.truncate(k);
            dists.sort_by(cmp);
            dists
        })
        .collect();
    let sigma = neighbors.iter().map(|nb| nb[k - 1].0).sum::<f64>() / m as f64;

    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (j, nb) in neighbors.iter().enumerate() {
        for &(d, o) in nb {
            pairs.insert((j.min(o), j.max(o)), d);
        }
    }
    let edges = pairs.into_iter().map(|((u, v), d)| {
        let w = if d == 0.0 { 1.0 } else { (-d / sigma).exp() };
        (u, v, w)
    });
    WeightedGraph::new(m, edges)
}

/// Fraction of nodes whose weighted neighbor vote reproduces their own
/// label (ties to the lexicographically smallest label). Nodes without
/// neighbors count as misses.
pub fn knn_label_accuracy(graph: &WeightedGraph, labels: &[String]) -> Result<f64> {
    if labels.len() != graph.n_nodes() || labels.is_empty() {
        return Err(Error::argument("one label per node required"));
    }
    let mut hits = 0usize;
    for u in 0..graph.n_nodes() {
        let mut votes: HashMap<&str, f64> = HashMap::new();
        for (v, w) in graph.neighbors(u) {
            *votes.entry(labels[v].as_str()).or_default() += w;
        }
        let best = votes.into_iter().max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(a.0))).map(|(l, _)| l);
        if best == Some(labels[u].as_str()) {
            hits += 1;
        }
    }
    Ok(hits as f64 / labels.len() as f64)
}
