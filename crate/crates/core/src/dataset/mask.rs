use ndarray::Array2;

use super::PlaylistCorpus;
use crate::error::{Error, Result};

/// Confidence given to unobserved playlist/song pairs.
pub const DEFAULT_EPSILON: f64 = 0.1;

/// Confidence mask Ω: 1 on observed entries, ε elsewhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightMask {
    epsilon: f64,
}

impl WeightMask {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::argument(format!("mask epsilon must lie in (0, 1), got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn value(&self, corpus: &PlaylistCorpus, i: usize, j: usize) -> f64 {
        if corpus.contains(i, j) {
            1.0
        } else {
            self.epsilon
        }
    }

    /// Dense n × m mask for `corpus`.
    pub fn to_dense(&self, corpus: &PlaylistCorpus) -> Array2<f64> {
        let mut omega = Array2::from_elem((corpus.n(), corpus.m()), self.epsilon);
        for (i, j) in corpus.entries() {
            omega[[i, j]] = 1.0;
        }
        omega
    }
}

pub fn build_weight_mask(_corpus: &PlaylistCorpus, epsilon: f64) -> Result<WeightMask> {
    WeightMask::new(epsilon)
}
