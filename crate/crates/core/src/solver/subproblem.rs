//! Primal-dual solves of one factor with the other held fixed.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::objective::{kl_fidelity, Regularizer};
use super::prox::prox_kl_conj_scalar;
use crate::error::{Error, Result};
use crate::graph::{operator_norm, GradientOperator};

/// Graph penalty acting on the free factor's node signals.
#[derive(Debug, Clone, Copy)]
pub struct GraphPenalty<'a> {
    pub op: &'a GradientOperator,
    /// Spectral norm of `op`; sets `σ₂ = τ₂ = 1 / ‖K‖`.
    pub op_norm: f64,
    pub theta: f64,
    pub kind: Regularizer,
}

impl GraphPenalty<'_> {
    fn is_active(&self) -> bool {
        self.theta > 0.0 && self.kind != Regularizer::None
    }
}

/// How primal and dual step sizes are chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepRule {
    /// `σ₁ = τ₁ = 1/‖M‖`, `σ₂ = τ₂ = 1/‖K‖`, no extrapolation.
    ArrowHurwicz,
    /// Dual steps `1/‖M‖` and `1/‖K‖`, one primal step `1/(‖M‖ + ‖K‖)`,
    /// with over-relaxation of the primal iterate.
    ChambollePock,
    /// Per-coordinate steps from the absolute row and column sums of the
    /// stacked operator, with over-relaxation.
    #[default]
    Preconditioned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOptions {
    pub max_iters: usize,
    /// Stop once `‖X_{k+1} − X_k‖_F / ‖X_k‖_F` falls below this.
    pub tol: f64,
    pub log_floor: f64,
    /// Clip the TV dual at `θ / σ₂` instead of `θ`.
    pub scaled_tv_clip: bool,
    pub power_tol: f64,
    pub power_max_iters: usize,
    /// Record the subproblem objective after every iteration.
    pub record_trace: bool,
    pub step_rule: StepRule,
    /// Multiplies primal steps and divides dual steps.
    pub step_balance: f64,
    /// Preconditioned rule only: weight of the graph block relative to the
    /// data block when splitting the step budget.
    pub tv_scale: f64,
}

impl Default for InnerOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-4,
            log_floor: 1e-12,
            scaled_tv_clip: false,
            power_tol: 1e-6,
            power_max_iters: 500,
            record_trace: false,
            step_rule: StepRule::default(),
            step_balance: 2.0,
            tv_scale: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemOutcome {
    pub factor: Array2<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Objective (fidelity + this factor's penalty) after each iteration when
    /// requested.
    pub trace: Vec<f64>,
}

/// Updates `B` (r × m) for fixed `A` (n × r).
pub fn solve_subproblem_b(
    a: ArrayView2<f64>,
    b0: Array2<f64>,
    c: ArrayView2<f64>,
    omega: ArrayView2<f64>,
    penalty: Option<GraphPenalty>,
    opts: &InnerOptions,
) -> Result<SubproblemOutcome> {
    if a.ncols() != b0.nrows() || c.dim() != (a.nrows(), b0.ncols()) || omega.dim() != c.dim() {
        return Err(Error::argument("subproblem B dimensions do not match"));
    }
    primal_dual(a, b0, c, omega, penalty, opts)
}

/// Updates `A` (n × r) for fixed `B` (r × m). Runs the same scheme on the
/// transposed problem `Cᵀ ≈ Bᵀ Aᵀ`.
pub fn solve_subproblem_a(
    a0: Array2<f64>,
    b: ArrayView2<f64>,
    c: ArrayView2<f64>,
    omega: ArrayView2<f64>,
    penalty: Option<GraphPenalty>,
    opts: &InnerOptions,
) -> Result<SubproblemOutcome> {
    if a0.ncols() != b.nrows() || c.dim() != (a0.nrows(), b.ncols()) || omega.dim() != c.dim() {
        return Err(Error::argument("subproblem A dimensions do not match"));
    }
    let x0 = a0.reversed_axes();
    let mut out = primal_dual(b.t(), x0, c.t(), omega.t(), penalty, opts)?;
    out.factor = out.factor.reversed_axes();
    Ok(out)
}

fn penalty_value(p: &GraphPenalty, x: ArrayView2<f64>) -> f64 {
    if !p.is_active() {
        return 0.0;
    }
    let kx = p.op.apply(x.t());
    match p.kind {
        Regularizer::Tv => p.theta * kx.iter().map(|v| v.abs()).sum::<f64>(),
        Regularizer::Tikhonov => 0.5 * p.theta * kx.iter().map(|v| v * v).sum::<f64>(),
        Regularizer::None => 0.0,
    }
}

/// `min_{X ≥ 0} F(M X) + G(K Xᵀ)` for fixed `M` (p × r) and free `X`
/// (r × q); graph nodes index the columns of `X`.
fn primal_dual(
    fixed: ArrayView2<f64>,
    x0: Array2<f64>,
    c: ArrayView2<f64>,
    omega: ArrayView2<f64>,
    penalty: Option<GraphPenalty>,
    opts: &InnerOptions,
) -> Result<SubproblemOutcome> {
    if x0.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::argument("initial factor must be non-negative and finite"));
    }
    let penalty = penalty.filter(GraphPenalty::is_active);
    if let Some(p) = &penalty {
        if p.op.n_nodes() != x0.ncols() {
            return Err(Error::argument(format!("graph has {} nodes, factor has {}", p.op.n_nodes(), x0.ncols())));
        }
        if !(p.op_norm > 0.0) {
            return Err(Error::argument("graph operator norm must be positive"));
        }
    }
    let (r, q) = x0.dim();
    let p_rows = fixed.nrows();
    let mut steps = StepSizes::new(opts.step_rule, fixed, penalty.as_ref(), (r, q), opts)?;
    if opts.step_balance != 1.0 {
        let g = opts.step_balance;
        steps.tau1 *= g;
        steps.tau2 *= g;
        steps.sigma1 /= g;
        steps.sigma2 /= g;
    }
    let extrapolate = opts.step_rule != StepRule::ArrowHurwicz;

    let mut x = x0;
    let mut xbar = x.clone();
    let mut y1 = Array2::<f64>::zeros((p_rows, q));
    let mut y2 = penalty.as_ref().map(|p| Array2::<f64>::zeros((p.op.n_edges(), r)));
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=opts.max_iters {
        iterations = it;
        let mx = fixed.dot(&xbar);
        Zip::from(y1.rows_mut()).and(mx.rows()).and(omega.rows()).and(c.rows()).and(&steps.sigma1).for_each(
            |yr, zr, wr, cr, &s| {
                Zip::from(yr)
                    .and(zr)
                    .and(wr)
                    .and(cr)
                    .for_each(|y, &z, &w, &c| *y = prox_kl_conj_scalar(*y + s * z, w, c, s))
            },
        );
        let mut step = fixed.t().dot(&y1);
        step *= &steps.tau1;

        if let (Some(p), Some(y2)) = (&penalty, y2.as_mut()) {
            let kx = p.op.apply(xbar.t());
            match p.kind {
                Regularizer::Tv => Zip::from(y2.rows_mut()).and(kx.rows()).and(&steps.sigma2).for_each(|yr, gr, &s| {
                    let clip = if opts.scaled_tv_clip { p.theta / s } else { p.theta };
                    Zip::from(yr).and(gr).for_each(|y, &g| *y = (*y + s * g).clamp(-clip, clip))
                }),
                Regularizer::Tikhonov => {
                    Zip::from(y2.rows_mut()).and(kx.rows()).and(&steps.sigma2).for_each(|yr, gr, &s| {
                        let shrink = p.theta / (s + p.theta);
                        Zip::from(yr).and(gr).for_each(|y, &g| *y = shrink * (*y + s * g))
                    })
                }
                Regularizer::None => unreachable!("inactive penalties are filtered"),
            }
            let kty = p.op.apply_transpose(y2.view());
            Zip::from(&mut step).and(kty.t()).and(&steps.tau2).for_each(|s, &g, &t| *s += t * g);
        }

        let mut diff2 = 0.0;
        let mut norm2 = 0.0;
        Zip::from(&mut x).and(&mut xbar).and(&step).for_each(|xv, xb, &s| {
            let new = (*xv - s).max(0.0);
            diff2 += (new - *xv) * (new - *xv);
            norm2 += *xv * *xv;
            *xb = if extrapolate { 2.0 * new - *xv } else { new };
            *xv = new;
        });
        if !diff2.is_finite() {
            return Err(Error::Numeric { iteration: it, message: "non-finite primal update".into() });
        }
        if opts.record_trace {
            let mx = fixed.dot(&x);
            let mut f = kl_fidelity(c, omega, mx.view(), opts.log_floor);
            if let Some(p) = &penalty {
                f += penalty_value(p, x.view());
            }
            if !f.is_finite() {
                return Err(Error::Numeric { iteration: it, message: "non-finite objective".into() });
            }
            trace.push(f);
        }
        if diff2.sqrt() <= opts.tol * norm2.sqrt().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }

    Ok(SubproblemOutcome { factor: x, iterations, converged, trace })
}

/// Step sizes for one subproblem solve.
struct StepSizes {
    /// Per row of the fixed factor.
    sigma1: Array1<f64>,
    /// Per graph edge.
    sigma2: Array1<f64>,
    /// Primal steps for the fidelity and graph gradients, per entry of X.
    tau1: Array2<f64>,
    tau2: Array2<f64>,
}

impl StepSizes {
    fn new(
        rule: StepRule,
        fixed: ArrayView2<f64>,
        penalty: Option<&GraphPenalty>,
        (r, q): (usize, usize),
        opts: &InnerOptions,
    ) -> Result<Self> {
        let n_edges = penalty.map_or(0, |p| p.op.n_edges());
        let p_rows = fixed.nrows();
        match rule {
            StepRule::ArrowHurwicz | StepRule::ChambollePock => {
                let norm = operator_norm(&fixed, opts.power_tol, opts.power_max_iters)?.value;
                let k_norm = penalty.map_or(0.0, |p| p.op_norm);
                let (tau1, tau2) = match rule {
                    StepRule::ArrowHurwicz => (1.0 / norm, if k_norm > 0.0 { 1.0 / k_norm } else { 0.0 }),
                    _ => {
                        let t = 1.0 / (norm + k_norm);
                        (t, t)
                    }
                };
                Ok(Self {
                    sigma1: Array1::from_elem(p_rows, 1.0 / norm),
                    sigma2: Array1::from_elem(n_edges, if k_norm > 0.0 { 1.0 / k_norm } else { 0.0 }),
                    tau1: Array2::from_elem((r, q), tau1),
                    tau2: Array2::from_elem((r, q), tau2),
                })
            }
            StepRule::Preconditioned => {
                let row_sums = fixed.mapv(f64::abs).sum_axis(Axis(1));
                let col_sums = fixed.mapv(f64::abs).sum_axis(Axis(0));
                let mut degree = vec![0.0; q];
                let mut sigma2 = Array1::zeros(n_edges);
                if let Some(p) = penalty {
                    for (e, edge) in p.op.edges().iter().enumerate() {
                        degree[edge.u] += opts.tv_scale * edge.weight;
                        degree[edge.v] += opts.tv_scale * edge.weight;
                        sigma2[e] = opts.tv_scale / (2.0 * edge.weight);
                    }
                }
                let inv = |v: f64| if v > 0.0 { 1.0 / v } else { 0.0 };
                let tau = Array2::from_shape_fn((r, q), |(l, j)| inv(col_sums[l] + degree[j]));
                Ok(Self { sigma1: row_sums.mapv(inv), sigma2, tau1: tau.clone(), tau2: tau })
            }
        }
    }
}
