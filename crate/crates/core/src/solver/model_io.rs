//! Binary model container: magic, version, JSON header, then `A` and `B`
//! as row-major little-endian `f64` blocks.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Factorization, Regularizer, SolveReport, SolverConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RECOGMDL";
pub const MODEL_VERSION: u32 = 1;

/// Identifiers and provenance stored next to the factors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub playlist_ids: Vec<String>,
    pub song_ids: Vec<String>,
    /// Free-form provenance (split seed, data hashes, ...).
    #[serde(default)]
    pub extra: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    n: usize,
    m: usize,
    r: usize,
    theta_a: f64,
    theta_b: f64,
    regularizer: Regularizer,
    seed: u64,
    config: SolverConfig,
    config_hash: String,
    playlist_graph_fingerprint: Option<String>,
    song_graph_fingerprint: Option<String>,
    factor_fingerprint: String,
    report: SolveReport,
    meta: ModelMeta,
}

/// SHA-256 of the canonical JSON form of a solver configuration.
pub fn config_hash(cfg: &SolverConfig) -> String {
    use sha2::{Digest, Sha256};
    let bytes = serde_json::to_vec(cfg).unwrap_or_default();
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn save_model(path: impl AsRef<Path>, model: &Factorization, meta: &ModelMeta) -> Result<()> {
    let (n, r) = model.a.dim();
    let m = model.b.ncols();
    if model.b.nrows() != r {
        return Err(Error::argument("factor ranks differ"));
    }
    if !meta.playlist_ids.is_empty() && meta.playlist_ids.len() != n {
        return Err(Error::argument("playlist id count differs from A"));
    }
    if !meta.song_ids.is_empty() && meta.song_ids.len() != m {
        return Err(Error::argument("song id count differs from B"));
    }
    let header = Header {
        n,
        m,
        r,
        theta_a: model.config.theta_a,
        theta_b: model.config.theta_b,
        regularizer: model.config.regularizer,
        seed: model.config.seed,
        config: model.config.clone(),
        config_hash: config_hash(&model.config),
        playlist_graph_fingerprint: model.playlist_graph_fingerprint.clone(),
        song_graph_fingerprint: model.song_graph_fingerprint.clone(),
        factor_fingerprint: model.fingerprint(),
        report: model.report.clone(),
        meta: meta.clone(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&MODEL_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for mat in [&model.a, &model.b] {
        for v in mat.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_block(r: &mut impl Read, rows: usize, cols: usize, name: &str) -> Result<Array2<f64>> {
    let mut buf = vec![0u8; rows * cols * 8];
    r.read_exact(&mut buf).map_err(|_| Error::validation(format!("model file truncated in {name}")))?;
    let vals: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::validation(format!("{name} has negative or non-finite entries")));
    }
    Array2::from_shape_vec((rows, cols), vals).map_err(|e| Error::validation(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Factorization, ModelMeta)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| Error::validation("not a model file"))?;
    if &magic != MAGIC {
        return Err(Error::validation("not a model file"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != MODEL_VERSION {
        return Err(Error::validation(format!("unsupported model version {version}")));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len) as usize;
    if len > 1 << 30 {
        return Err(Error::validation("model header too large"));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(|_| Error::validation("model file truncated in header"))?;
    let h: Header = serde_json::from_slice(&json)?;
    if h.config.rank != h.r {
        return Err(Error::validation("header rank disagrees with config"));
    }
    if config_hash(&h.config) != h.config_hash {
        return Err(Error::validation("config hash mismatch"));
    }
    let a = read_block(&mut r, h.n, h.r, "A")?;
    let b = read_block(&mut r, h.r, h.m, "B")?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::validation("trailing bytes after factors"));
    }
    let model = Factorization {
        a,
        b,
        config: h.config,
        playlist_graph_fingerprint: h.playlist_graph_fingerprint,
        song_graph_fingerprint: h.song_graph_fingerprint,
        report: h.report,
    };
    if model.fingerprint() != h.factor_fingerprint {
        return Err(Error::validation("factor fingerprint mismatch"));
    }
    Ok((model, h.meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn model() -> Factorization {
        Factorization {
            a: arr2(&[[0.1, 0.2], [1.0 / 3.0, 0.0], [5e-300, 7.0]]),
            b: arr2(&[[1.0, 2.0, 3.0, 4.0], [0.5, 0.25, 0.125, 1e-17]]),
            config: SolverConfig { rank: 2, ..Default::default() },
            playlist_graph_fingerprint: Some("abc".into()),
            song_graph_fingerprint: None,
            report: SolveReport { outer_iterations: 3, objective: vec![3.0, 2.0, 1.5], ..Default::default() },
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let meta = ModelMeta {
            playlist_ids: vec!["p0".into(), "p1".into(), "p2".into()],
            song_ids: (0..4).map(|i| format!("s{i}")).collect(),
            extra: serde_json::json!({"split_seed": 4}),
        };
        save_model(&p, &model(), &meta).unwrap();
        let (back, m2) = load_model(&p).unwrap();
        assert_eq!(back, model());
        assert_eq!(m2, meta);
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        save_model(&p, &model(), &ModelMeta::default()).unwrap();
        let good = std::fs::read(&p).unwrap();

        let mut flipped = good.clone();
        let last = flipped.len() - 3;
        flipped[last] ^= 0x01;
        std::fs::write(&p, &flipped).unwrap();
        assert!(load_model(&p).is_err());

        std::fs::write(&p, &good[..good.len() - 8]).unwrap();
        assert!(load_model(&p).is_err());

        let mut extra = good.clone();
        extra.push(0);
        std::fs::write(&p, &extra).unwrap();
        assert!(load_model(&p).is_err());

        std::fs::write(&p, b"garbage!").unwrap();
        assert!(load_model(&p).is_err());
    }

    #[test]
    fn id_counts_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ModelMeta { song_ids: vec!["x".into()], ..Default::default() };
        assert!(save_model(dir.path().join("m"), &model(), &meta).is_err());
    }
}
