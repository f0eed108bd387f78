use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::PlaylistCorpus;
use crate::error::{Error, Result};
use crate::rng;

/// Partition of playlist indices into train and test sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub seed: u64,
    pub fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded random split; `round(fraction * n)` playlists go to train.
/// Both index lists come back sorted.
pub fn train_test_split(corpus: &PlaylistCorpus, fraction: f64, seed: u64) -> Result<SplitSpec> {
    let n = corpus.n();
    if n < 2 {
        return Err(Error::argument(format!("cannot split {n} playlists")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::argument(format!("train fraction must lie in (0, 1), got {fraction}")));
    }
    let n_train = (fraction * n as f64).round() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::argument(format!("fraction {fraction} of {n} playlists leaves an empty side")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::STREAM_SPLIT));
    let mut train = order[..n_train].to_vec();
    let mut test = order[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitSpec { seed, fraction, train, test })
}

impl SplitSpec {
    /// Checks the split partitions `0..n`.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = vec![false; n];
        for &i in self.train.iter().chain(&self.test) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::validation(format!("split index {i} is out of range or repeated")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::validation("split does not cover every playlist"));
        }
        Ok(())
    }
}

pub fn save_split(split: &SplitSpec, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, split)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn load_split(path: impl AsRef<Path>) -> Result<SplitSpec> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}
