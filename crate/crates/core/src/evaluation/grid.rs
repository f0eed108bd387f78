use serde::{Deserialize, Serialize};

use super::pipeline::{train_model, validation_mpr, Prepared};
use super::queries::EvalQuery;
use crate::error::{Error, Result};
use crate::solver::{nndsvd, SolverConfig, ZeroFill};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub theta_a: f64,
    pub theta_b: f64,
    pub score: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub theta_a: f64,
    pub theta_b: f64,
    pub score: f64,
    /// Row-major over (θ_A, θ_B).
    pub cells: Vec<GridCell>,
}

/// Trains one model per (θ_A, θ_B) from a shared start and picks the lowest
/// validation MPR, ties to the smaller pair. Failed cells are reported and
/// skipped.
pub fn grid_search(
    prepared: &Prepared,
    base: &SolverConfig,
    theta_a: &[f64],
    theta_b: &[f64],
    validation: &[EvalQuery],
) -> Result<GridResult> {
    if theta_a.is_empty() || theta_b.is_empty() {
        return Err(Error::argument("grid axes must be nonempty"));
    }
    if validation.is_empty() {
        return Err(Error::argument("grid search needs validation queries"));
    }
    let init = nndsvd(prepared.c.view(), base.rank, ZeroFill::Mean)?;
    let mut cells = Vec::with_capacity(theta_a.len() * theta_b.len());
    for &ta in theta_a {
        for &tb in theta_b {
            let cfg = SolverConfig { theta_a: ta, theta_b: tb, ..base.clone() };
            let out = train_model(prepared, &cfg, Some(&init), Some(validation))
                .and_then(|f| validation_mpr(validation, f.a.view(), f.b.view()));
            let (score, error) = match out {
                Ok(s) if s.is_finite() => (Some(s), None),
                Ok(s) => (None, Some(format!("non-finite score {s}"))),
                Err(e) => (None, Some(e.to_string())),
            };
            cells.push(GridCell { theta_a: ta, theta_b: tb, score, error });
        }
    }
    let best = cells
        .iter()
        .filter_map(|c| c.score.map(|s| (s, c.theta_a, c.theta_b)))
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.total_cmp(&y.2)))
        .ok_or_else(|| Error::argument("every grid cell failed"))?;
    Ok(GridResult { score: best.0, theta_a: best.1, theta_b: best.2, cells })
}
