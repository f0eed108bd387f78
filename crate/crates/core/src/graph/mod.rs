//! Similarity graphs over playlists and songs, and the graph operators the
//! solver needs.

mod builders;
mod io;
mod modularity;
mod operator;
mod tv;

pub use builders::{
    build_knn_graph, build_playlist_graph, build_song_graph, cosine_similarity, knn_label_accuracy, PlaylistGraphConfig,
};
pub use io::{load_graph, save_graph, GraphMeta};
pub use modularity::modularity;
pub use operator::{gradient_operator, operator_norm, GradientOperator, LinearOperator, NormEstimate};
pub use tv::{dirichlet_energy, tv_seminorm, Orientation};

use std::collections::HashSet;

use crate::error::{Error, Result};

/// An undirected edge stored once with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Undirected graph with strictly positive edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_nodes: usize,
    edges: Vec<Edge>,
    /// Per node: `(neighbor, edge index)`.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl WeightedGraph {
    /// Builds a graph from `(u, v, w)` triples. Endpoint order is normalized;
    /// self-loops, repeated pairs, and non-positive or non-finite weights are
    /// rejected.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        let mut adjacency = vec![Vec::new(); n_nodes];
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::validation(format!("self-loop at node {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if v >= n_nodes {
                return Err(Error::validation(format!("edge ({u}, {v}) outside {n_nodes} nodes")));
            }
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::validation(format!("edge ({u}, {v}) has weight {w}")));
            }
            if !seen.insert((u, v)) {
                return Err(Error::validation(format!("duplicate edge ({u}, {v})")));
            }
            let e = out.len();
            adjacency[u].push((v, e));
            adjacency[v].push((u, e));
            out.push(Edge { u, v, weight: w });
        }
        Ok(Self { n_nodes, edges: out, adjacency })
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `u` as `(node, weight)`.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adjacency[u].iter().map(move |&(v, e)| (v, self.edges[e].weight))
    }

    pub fn degree(&self, u: usize) -> f64 {
        self.neighbors(u).map(|(_, w)| w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Same topology with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.n_nodes, self.edges.iter().map(|e| (e.u, e.v, e.weight * factor)))
    }
}
