use std::collections::HashMap;

use super::WeightedGraph;
use crate::error::{Error, Result};

/// Weighted Newman modularity of `partition` (community label per node):
/// `Q = Σ_c [ L_c / W − (D_c / 2W)² ]` with `L_c` the intra-community edge
/// weight, `D_c` the community's total degree and `W` the total edge weight.
pub fn modularity(graph: &WeightedGraph, partition: &[usize]) -> Result<f64> {
    if partition.len() != graph.n_nodes() {
        return Err(Error::argument(format!("partition covers {} of {} nodes", partition.len(), graph.n_nodes())));
    }
    let total = graph.total_weight();
    if graph.n_edges() == 0 || total <= 0.0 {
        return Err(Error::argument("modularity of an edgeless graph"));
    }
    let mut internal: HashMap<usize, f64> = HashMap::new();
    let mut degree: HashMap<usize, f64> = HashMap::new();
    for e in graph.edges() {
        let (cu, cv) = (partition[e.u], partition[e.v]);
        if cu == cv {
            *internal.entry(cu).or_default() += e.weight;
        }
        *degree.entry(cu).or_default() += e.weight;
        *degree.entry(cv).or_default() += e.weight;
    }
    let mut communities: Vec<usize> = degree.keys().copied().collect();
    communities.sort_unstable();
    let q = communities
        .iter()
        .map(|c| {
            let l = internal.get(c).copied().unwrap_or(0.0);
            let d = degree[c];
            l / total - (d / (2.0 * total)).powi(2)
        })
        .sum();
    Ok(q)
}
