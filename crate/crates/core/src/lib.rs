//! Playlist completion with total-variation regularized NMF.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod graph;
pub mod recommender;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
