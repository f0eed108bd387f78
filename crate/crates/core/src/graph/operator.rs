use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{Edge, WeightedGraph};
use crate::error::{Error, Result};
use crate::rng;

/// Signed weighted edge-incidence matrix K (edges × nodes). Row `e` for edge
/// `(u, v, w)` holds `+w` at `u` and `-w` at `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientOperator {
    n_nodes: usize,
    edges: Vec<Edge>,
}

pub fn gradient_operator(graph: &WeightedGraph) -> Result<GradientOperator> {
    if graph.n_edges() == 0 {
        return Err(Error::argument("gradient operator of an edgeless graph"));
    }
    Ok(GradientOperator { n_nodes: graph.n_nodes(), edges: graph.edges().to_vec() })
}

impl GradientOperator {
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// `K X` for node signals stored one row per node (N × r → n_e × r).
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(x.nrows(), self.n_nodes, "node dimension mismatch");
        let mut out = Array2::zeros((self.edges.len(), x.ncols()));
        for (e, mut row) in self.edges.iter().zip(out.rows_mut()) {
            let xu = x.row(e.u);
            let xv = x.row(e.v);
            for ((o, a), b) in row.iter_mut().zip(xu).zip(xv) {
                *o = e.weight * (a - b);
            }
        }
        out
    }

    /// `Kᵀ Y` (n_e × r → N × r).
    pub fn apply_transpose(&self, y: ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(y.nrows(), self.edges.len(), "edge dimension mismatch");
        let mut out = Array2::zeros((self.n_nodes, y.ncols()));
        for (e, yr) in self.edges.iter().zip(y.rows()) {
            for (c, &val) in yr.iter().enumerate() {
                let s = e.weight * val;
                out[[e.u, c]] += s;
                out[[e.v, c]] -= s;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut k = Array2::zeros((self.edges.len(), self.n_nodes));
        for (r, e) in self.edges.iter().enumerate() {
            k[[r, e.u]] = e.weight;
            k[[r, e.v]] = -e.weight;
        }
        k
    }
}

/// A matrix-free linear map, enough for power iteration.
pub trait LinearOperator {
    /// `(rows, cols)`.
    fn shape(&self) -> (usize, usize);
    fn matvec(&self, x: &[f64], out: &mut [f64]);
    fn rmatvec(&self, y: &[f64], out: &mut [f64]);
}

impl LinearOperator for ArrayView2<'_, f64> {
    fn shape(&self) -> (usize, usize) {
        self.dim()
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(self.rows()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn rmatvec(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&yi, row) in y.iter().zip(self.rows()) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * yi;
            }
        }
    }
}

impl LinearOperator for Array2<f64> {
    fn shape(&self) -> (usize, usize) {
        self.dim()
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        self.view().matvec(x, out)
    }

    fn rmatvec(&self, y: &[f64], out: &mut [f64]) {
        self.view().rmatvec(y, out)
    }
}

impl LinearOperator for GradientOperator {
    fn shape(&self) -> (usize, usize) {
        (self.edges.len(), self.n_nodes)
    }

    fn matvec(&self, x: &[f64], out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.edges) {
            *o = e.weight * (x[e.u] - x[e.v]);
        }
    }

    fn rmatvec(&self, y: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (&yi, e) in y.iter().zip(&self.edges) {
            out[e.u] += e.weight * yi;
            out[e.v] -= e.weight * yi;
        }
    }
}

/// Result of a power-iteration spectral norm estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Largest singular value by power iteration on MᵀM from a fixed seeded
/// start vector. Stops when successive estimates agree to `tol` relative; if
/// `max_iters` runs out first the last estimate is returned unconverged.
pub fn operator_norm<M: LinearOperator + ?Sized>(op: &M, tol: f64, max_iters: usize) -> Result<NormEstimate> {
    let (rows, cols) = op.shape();
    if rows == 0 || cols == 0 {
        return Err(Error::argument("operator norm of an empty operator"));
    }
    let mut rng = rng::stream(0x5EED, rng::STREAM_POWER_ITERATION);
    let mut x: Vec<f64> = (0..cols).map(|_| rng.sample(StandardNormal)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut y = vec![0.0; rows];
    let mut z = vec![0.0; cols];
    let mut estimate = 0.0;
    for it in 1..=max_iters.max(1) {
        op.matvec(&x, &mut y);
        let sigma = norm2(&y);
        op.rmatvec(&y, &mut z);
        let nz = norm2(&z);
        if nz == 0.0 || sigma == 0.0 {
            if it == 1 {
                return Err(Error::argument("operator norm of a zero operator"));
            }
            return Ok(NormEstimate { value: estimate, iterations: it, converged: true });
        }
        let done = it > 1 && (sigma - estimate).abs() <= tol * sigma;
        estimate = sigma;
        if done {
            return Ok(NormEstimate { value: estimate, iterations: it, converged: true });
        }
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi = zi / nz;
        }
    }
    log::warn!("power iteration did not converge in {max_iters} iterations");
    Ok(NormEstimate { value: estimate, iterations: max_iters, converged: false })
}
