use ndarray::ArrayView2;

use super::WeightedGraph;
use crate::error::{Error, Result};

/// Which axis of a factor matrix indexes graph nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Node `i` is row `i` (the playlist factor A).
    RowsAreNodes,
    /// Node `j` is column `j` (the song factor B).
    ColumnsAreNodes,
}

fn node_view<'a>(x: ArrayView2<'a, f64>, orientation: Orientation) -> ArrayView2<'a, f64> {
    match orientation {
        Orientation::RowsAreNodes => x,
        Orientation::ColumnsAreNodes => x.reversed_axes(),
    }
}

/// Graph total variation `(1/2) Σ_u Σ_{v~u} w_uv ‖X_u − X_v‖₁`, evaluated by
/// walking every node's neighbor list.
pub fn tv_seminorm(graph: &WeightedGraph, x: ArrayView2<f64>, orientation: Orientation) -> Result<f64> {
    let nodes = node_view(x, orientation);
    if nodes.nrows() != graph.n_nodes() {
        return Err(Error::argument(format!("signal has {} nodes, graph has {}", nodes.nrows(), graph.n_nodes())));
    }
    let mut total = 0.0;
    for u in 0..graph.n_nodes() {
        let xu = nodes.row(u);
        for (v, w) in graph.neighbors(u) {
            let d: f64 = xu.iter().zip(nodes.row(v)).map(|(a, b)| (a - b).abs()).sum();
            total += w * d;
        }
    }
    Ok(0.5 * total)
}

/// `(1/2) ‖K X‖²_F`, the quadratic counterpart of [`tv_seminorm`] built on the
/// same gradient weights.
pub fn dirichlet_energy(graph: &WeightedGraph, x: ArrayView2<f64>, orientation: Orientation) -> Result<f64> {
    let nodes = node_view(x, orientation);
    if nodes.nrows() != graph.n_nodes() {
        return Err(Error::argument(format!("signal has {} nodes, graph has {}", nodes.nrows(), graph.n_nodes())));
    }
    let mut total = 0.0;
    for e in graph.edges() {
        let sq: f64 = nodes.row(e.u).iter().zip(nodes.row(e.v)).map(|(a, b)| (e.weight * (a - b)).powi(2)).sum();
        total += sq;
    }
    Ok(0.5 * total)
}
