//! Alternating primal-dual solver for weighted-KL NMF with graph
//! regularization.

mod model_io;
mod nndsvd;
mod objective;
mod prox;
mod subproblem;

pub use model_io::{config_hash, load_model, save_model, ModelMeta, MODEL_VERSION};
pub use nndsvd::{nndsvd, ZeroFill};
pub use objective::{kl_fidelity, kl_objective, GraphTerms, Regularizer};
pub use prox::{prox_kl_conj, prox_kl_conj_scalar, prox_tikhonov_conj, prox_tv_conj};
pub use subproblem::{solve_subproblem_a, solve_subproblem_b, GraphPenalty, InnerOptions, StepRule, SubproblemOutcome};

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{gradient_operator, operator_norm, GradientOperator, WeightedGraph};

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rank: usize,
    pub theta_a: f64,
    pub theta_b: f64,
    pub regularizer: Regularizer,
    pub inner_iters: usize,
    pub inner_tol: f64,
    pub outer_iters: usize,
    /// Run the validation hook every this many outer iterations (and after
    /// the last one).
    pub validation_interval: usize,
    /// Consecutive validation checks without improvement before stopping.
    pub patience: usize,
    pub log_floor: f64,
    /// Clip the TV dual at `θ / σ₂` instead of `θ`.
    pub scaled_tv_clip: bool,
    pub power_tol: f64,
    pub power_max_iters: usize,
    pub step_rule: StepRule,
    pub step_balance: f64,
    pub tv_scale: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank: 15,
            theta_a: 18.0,
            theta_b: 1.0,
            regularizer: Regularizer::Tv,
            inner_iters: 200,
            inner_tol: 1e-4,
            outer_iters: 50,
            validation_interval: 1,
            patience: 1,
            log_floor: 1e-12,
            scaled_tv_clip: false,
            power_tol: 1e-6,
            power_max_iters: 500,
            step_rule: StepRule::default(),
            step_balance: 2.0,
            tv_scale: 10.0,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::argument("rank must be at least 1"));
        }
        if !(self.theta_a >= 0.0 && self.theta_b >= 0.0) {
            return Err(Error::argument("theta values must be non-negative"));
        }
        if !(self.step_balance > 0.0 && self.step_balance.is_finite())
            || !(self.tv_scale > 0.0 && self.tv_scale.is_finite())
        {
            return Err(Error::argument("step_balance and tv_scale must be positive"));
        }
        if self.inner_iters == 0 || self.outer_iters == 0 || self.validation_interval == 0 {
            return Err(Error::argument("iteration counts must be at least 1"));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::argument("log floor must be positive"));
        }
        Ok(())
    }

    pub fn inner_options(&self) -> InnerOptions {
        InnerOptions {
            max_iters: self.inner_iters,
            tol: self.inner_tol,
            log_floor: self.log_floor,
            scaled_tv_clip: self.scaled_tv_clip,
            power_tol: self.power_tol,
            power_max_iters: self.power_max_iters,
            record_trace: false,
            step_rule: self.step_rule,
            step_balance: self.step_balance,
            tv_scale: self.tv_scale,
        }
    }
}

/// Training inputs: incidence `C`, mask `Ω` and optional graphs.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub c: ArrayView2<'a, f64>,
    pub omega: ArrayView2<'a, f64>,
    pub playlist_graph: Option<&'a WeightedGraph>,
    pub song_graph: Option<&'a WeightedGraph>,
}

/// Per-run diagnostics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub outer_iterations: usize,
    /// Outer iteration (1-based) whose factors were kept; 0 is the
    /// initialization.
    pub best_outer: usize,
    pub objective: Vec<f64>,
    pub validation: Vec<f64>,
    /// Inner iteration counts `(B, A)` per outer iteration.
    pub inner_iterations: Vec<(usize, usize)>,
    pub stopped_early: bool,
}

/// Learned non-negative factors `A` (n × r) and `B` (r × m).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Factorization {
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub config: SolverConfig,
    pub playlist_graph_fingerprint: Option<String>,
    pub song_graph_fingerprint: Option<String>,
    pub report: SolveReport,
}

impl Factorization {
    pub fn rank(&self) -> usize {
        self.b.nrows()
    }

    pub fn n_playlists(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_songs(&self) -> usize {
        self.b.ncols()
    }

    /// SHA-256 over the factor bits and the training configuration.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for m in [&self.a, &self.b] {
            h.update((m.nrows() as u64).to_le_bytes());
            h.update((m.ncols() as u64).to_le_bytes());
            for v in m.iter() {
                h.update(v.to_le_bytes());
            }
        }
        h.update(serde_json::to_vec(&self.config).unwrap_or_default());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Validation hook: receives `(A, B)` after each outer iteration and returns
/// a score where lower is better.
pub type ValidationFn<'a> = dyn FnMut(ArrayView2<f64>, ArrayView2<f64>) -> Result<f64> + 'a;

struct Operator {
    op: GradientOperator,
    norm: f64,
}

fn prepare_operator(
    graph: Option<&WeightedGraph>,
    nodes: usize,
    cfg: &SolverConfig,
    theta: f64,
) -> Result<Option<Operator>> {
    let Some(g) = graph else { return Ok(None) };
    if g.n_nodes() != nodes {
        return Err(Error::argument(format!("graph has {} nodes, expected {nodes}", g.n_nodes())));
    }
    if g.n_edges() == 0 || theta == 0.0 || cfg.regularizer == Regularizer::None {
        return Ok(None);
    }
    let op = gradient_operator(g)?;
    let norm = operator_norm(&op, cfg.power_tol, cfg.power_max_iters)?.value;
    Ok(Some(Operator { op, norm }))
}

/// Trains from the NNDSVD-a initialization; see [`solve_from`].
pub fn solve(data: &TrainingData, cfg: &SolverConfig, validation: Option<&mut ValidationFn>) -> Result<Factorization> {
    cfg.validate()?;
    if data.c.is_empty() || data.c.sum() == 0.0 {
        return Err(Error::argument("empty training corpus"));
    }
    let (a0, b0) = nndsvd(data.c, cfg.rank, ZeroFill::Mean)?;
    solve_from(data, cfg, a0, b0, validation)
}

/// Alternates `B`- and `A`-subproblems from `(a0, b0)`. After each outer
/// iteration the validation hook (if any) scores the factors; the best
/// snapshot is kept and training stops after `patience` checks without
/// improvement.
pub fn solve_from(
    data: &TrainingData,
    cfg: &SolverConfig,
    a0: Array2<f64>,
    b0: Array2<f64>,
    mut validation: Option<&mut ValidationFn>,
) -> Result<Factorization> {
    cfg.validate()?;
    let (n, m) = data.c.dim();
    if data.omega.dim() != (n, m) {
        return Err(Error::argument("mask shape differs from the data"));
    }
    if a0.dim() != (n, cfg.rank) || b0.dim() != (cfg.rank, m) {
        return Err(Error::argument("initial factors do not match data and rank"));
    }
    let op_a = prepare_operator(data.playlist_graph, n, cfg, cfg.theta_a)?;
    let op_b = prepare_operator(data.song_graph, m, cfg, cfg.theta_b)?;
    fn pen(o: &Option<Operator>, theta: f64, kind: Regularizer) -> Option<GraphPenalty<'_>> {
        o.as_ref().map(|o| GraphPenalty { op: &o.op, op_norm: o.norm, theta, kind })
    }
    let terms = GraphTerms {
        kind: cfg.regularizer,
        theta_a: cfg.theta_a,
        theta_b: cfg.theta_b,
        playlist_graph: data.playlist_graph,
        song_graph: data.song_graph,
    };
    let opts = cfg.inner_options();

    let mut a = a0;
    let mut b = b0;
    let mut report = SolveReport::default();
    let mut best: Option<(f64, Array2<f64>, Array2<f64>)> = None;
    let mut stale = 0;

    for outer in 1..=cfg.outer_iters {
        let sb = solve_subproblem_b(a.view(), b, data.c, data.omega, pen(&op_b, cfg.theta_b, cfg.regularizer), &opts)?;
        b = sb.factor;
        let sa = solve_subproblem_a(a, b.view(), data.c, data.omega, pen(&op_a, cfg.theta_a, cfg.regularizer), &opts)?;
        a = sa.factor;
        report.outer_iterations = outer;
        report.inner_iterations.push((sb.iterations, sa.iterations));
        let obj = kl_objective(data.c, data.omega, a.view(), b.view(), &terms, cfg.log_floor)?;
        if !obj.is_finite() {
            return Err(Error::Numeric { iteration: outer, message: "non-finite objective".into() });
        }
        report.objective.push(obj);
        log::debug!("outer {outer}: objective {obj:.6} inner ({}, {})", sb.iterations, sa.iterations);

        let due = outer % cfg.validation_interval == 0 || outer == cfg.outer_iters;
        if let (Some(cb), true) = (validation.as_deref_mut(), due) {
            let score = cb(a.view(), b.view())?;
            report.validation.push(score);
            let improved = best.as_ref().is_none_or(|(s, _, _)| score < *s);
            if improved {
                best = Some((score, a.clone(), b.clone()));
                report.best_outer = outer;
                stale = 0;
            } else {
                stale += 1;
                if stale >= cfg.patience.max(1) {
                    report.stopped_early = true;
                    break;
                }
            }
        } else if best.is_none() {
            report.best_outer = outer;
        }
    }

    if let Some((_, ba, bb)) = best {
        a = ba;
        b = bb;
    }
    Ok(Factorization {
        a,
        b,
        config: cfg.clone(),
        playlist_graph_fingerprint: data.playlist_graph.map(WeightedGraph::fingerprint),
        song_graph_fingerprint: data.song_graph.map(WeightedGraph::fingerprint),
        report,
    })
}
