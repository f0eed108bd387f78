use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::WeightedGraph;
use crate::error::{Error, Result};

/// JSON sidecar stored next to a graph edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub node_count: usize,
    pub edge_count: usize,
    /// Builder name, e.g. `"playlist"` or `"song-knn"`.
    pub builder: String,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub fingerprint: String,
}

impl WeightedGraph {
    /// SHA-256 over node count and the exact edge bits.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_nodes() as u64).to_le_bytes());
        for e in self.edges() {
            h.update((e.u as u64).to_le_bytes());
            h.update((e.v as u64).to_le_bytes());
            h.update(e.weight.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".json");
    PathBuf::from(p)
}

/// Writes `src,dst,weight` rows to `path` and the metadata to
/// `<path>.json`. Weights use round-trip formatting.
pub fn save_graph(
    graph: &WeightedGraph,
    path: impl AsRef<Path>,
    builder: &str,
    params: serde_json::Value,
    seed: Option<u64>,
) -> Result<GraphMeta> {
    let path = path.as_ref();
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "src,dst,weight")?;
    for e in graph.edges() {
        writeln!(w, "{},{},{:?}", e.u, e.v, e.weight)?;
    }
    w.flush()?;
    let meta = GraphMeta {
        node_count: graph.n_nodes(),
        edge_count: graph.n_edges(),
        builder: builder.to_string(),
        params,
        seed,
        fingerprint: graph.fingerprint(),
    };
    let mut s = BufWriter::new(File::create(sidecar(path))?);
    serde_json::to_writer_pretty(&mut s, &meta)?;
    writeln!(s)?;
    s.flush()?;
    Ok(meta)
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<(WeightedGraph, GraphMeta)> {
    let path = path.as_ref();
    let meta: GraphMeta = serde_json::from_reader(BufReader::new(File::open(sidecar(path))?))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let mut edges = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = k + 2;
        let field =
            |i: usize| rec.get(i).ok_or_else(|| Error::Parse { line, message: "expected src,dst,weight".into() });
        let parse_err = |what: &str| Error::Parse { line, message: format!("bad {what}") };
        let u: usize = field(0)?.trim().parse().map_err(|_| parse_err("src"))?;
        let v: usize = field(1)?.trim().parse().map_err(|_| parse_err("dst"))?;
        let w: f64 = field(2)?.trim().parse().map_err(|_| parse_err("weight"))?;
        edges.push((u, v, w));
    }
    let graph = WeightedGraph::new(meta.node_count, edges)?;
    if graph.fingerprint() != meta.fingerprint {
        return Err(Error::validation(format!("graph {} does not match its sidecar fingerprint", path.display())));
    }
    Ok((graph, meta))
}
