use ndarray::{ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{dirichlet_energy, tv_seminorm, Orientation, WeightedGraph};

/// Graph regularizer attached to the factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    /// `θ ‖K X‖₁` (graph total variation).
    Tv,
    /// `(θ/2) ‖K X‖²` (Dirichlet energy).
    Tikhonov,
    None,
}

impl Regularizer {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regularizer::Tv => "tv",
            Regularizer::Tikhonov => "tikhonov",
            Regularizer::None => "none",
        }
    }
}

impl std::str::FromStr for Regularizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tv" => Ok(Regularizer::Tv),
            "tikhonov" | "gnmf" => Ok(Regularizer::Tikhonov),
            "none" | "nmf" => Ok(Regularizer::None),
            other => Err(Error::argument(format!("unknown regularizer {other:?}"))),
        }
    }
}

/// Weighted KL fidelity between `c` and the product `ab` (n × m):
/// `Σ −Ω C (log(AB / C) + 1) + Ω AB`, with `AB` floored at `floor` inside the
/// logarithm and zero entries of `C` contributing `Ω AB` only.
pub fn kl_fidelity(c: ArrayView2<f64>, omega: ArrayView2<f64>, ab: ArrayView2<f64>, floor: f64) -> f64 {
    let mut total = 0.0;
    Zip::from(&c).and(&omega).and(&ab).for_each(|&c, &w, &z| {
        total += if c > 0.0 { -w * c * ((z.max(floor) / c).ln() + 1.0) + w * z } else { w * z };
    });
    total
}

/// Graph terms of the objective.
#[derive(Debug, Clone, Copy)]
pub struct GraphTerms<'a> {
    pub kind: Regularizer,
    pub theta_a: f64,
    pub theta_b: f64,
    pub playlist_graph: Option<&'a WeightedGraph>,
    pub song_graph: Option<&'a WeightedGraph>,
}

impl GraphTerms<'_> {
    pub fn none() -> Self {
        GraphTerms { kind: Regularizer::None, theta_a: 0.0, theta_b: 0.0, playlist_graph: None, song_graph: None }
    }
}

pub(crate) fn graph_penalty(
    kind: Regularizer,
    theta: f64,
    graph: Option<&WeightedGraph>,
    x: ArrayView2<f64>,
    orientation: Orientation,
) -> Result<f64> {
    let Some(g) = graph else { return Ok(0.0) };
    if theta == 0.0 {
        return Ok(0.0);
    }
    Ok(match kind {
        Regularizer::Tv => theta * tv_seminorm(g, x, orientation)?,
        Regularizer::Tikhonov => theta * dirichlet_energy(g, x, orientation)?,
        Regularizer::None => 0.0,
    })
}

/// Full objective: weighted KL fidelity plus the active graph penalties on
/// the rows of `a` and the columns of `b`.
pub fn kl_objective(
    c: ArrayView2<f64>,
    omega: ArrayView2<f64>,
    a: ArrayView2<f64>,
    b: ArrayView2<f64>,
    terms: &GraphTerms,
    floor: f64,
) -> Result<f64> {
    if a.iter().chain(b.iter()).any(|&v| v < 0.0) {
        return Err(Error::argument("factors must be non-negative"));
    }
    if a.ncols() != b.nrows() || (a.nrows(), b.ncols()) != c.dim() || c.dim() != omega.dim() {
        return Err(Error::argument("factor dimensions do not match the data"));
    }
    let ab = a.dot(&b);
    let fid = kl_fidelity(c, omega, ab.view(), floor);
    let pa = graph_penalty(terms.kind, terms.theta_a, terms.playlist_graph, a, Orientation::RowsAreNodes)?;
    let pb = graph_penalty(terms.kind, terms.theta_b, terms.song_graph, b, Orientation::ColumnsAreNodes)?;
    Ok(fid + pa + pb)
}
