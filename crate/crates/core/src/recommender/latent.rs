use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::{Query, Scorer, Scores};
use crate::dataset::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::solver::Factorization;

pub const DEFAULT_RIDGE: f64 = 0.01;

fn gram(b: ArrayView2<f64>) -> Array2<f64> {
    b.dot(&b.t())
}

/// Solves `(B D Bᵀ + ε_ridge I) a = B D c` where `c` is 1 on the seeds and
/// `D` weighs seeds by 1 and every other song by `epsilon_mask`.
pub fn project_query(
    seeds: &[usize],
    b: ArrayView2<f64>,
    epsilon_ridge: f64,
    epsilon_mask: f64,
) -> Result<Array1<f64>> {
    project_with_gram(seeds, b, gram(b).view(), epsilon_ridge, epsilon_mask)
}

/// As [`project_query`] with `B Bᵀ` supplied: since `D = ε I + (1 − ε) P` for
/// the seed selector `P`, only the seed columns need touching per query.
fn project_with_gram(
    seeds: &[usize],
    b: ArrayView2<f64>,
    bbt: ArrayView2<f64>,
    epsilon_ridge: f64,
    epsilon_mask: f64,
) -> Result<Array1<f64>> {
    if !(epsilon_ridge > 0.0) {
        return Err(Error::argument("ridge must be positive"));
    }
    if !(epsilon_mask > 0.0 && epsilon_mask <= 1.0) {
        return Err(Error::argument("mask weight must lie in (0, 1]"));
    }
    let (r, m) = b.dim();
    Query::new(seeds.to_vec()).validate(m)?;
    let mut lhs = DMatrix::from_fn(r, r, |i, j| epsilon_mask * bbt[[i, j]]);
    let mut rhs = DVector::zeros(r);
    for &s in seeds {
        let col = b.column(s);
        for i in 0..r {
            // Seeds carry weight 1 and target 1.
            rhs[i] += col[i];
            for j in 0..r {
                lhs[(i, j)] += (1.0 - epsilon_mask) * col[i] * col[j];
            }
        }
    }
    for i in 0..r {
        lhs[(i, i)] += epsilon_ridge;
    }
    let chol = lhs
        .cholesky()
        .ok_or_else(|| Error::Numeric { iteration: 0, message: "projection system not positive definite".into() })?;
    let a = chol.solve(&rhs);
    Ok(Array1::from_iter(a.iter().copied()))
}

/// Gaussian-weighted mean of the rows of `A` around `a_in`, with bandwidth
/// a quarter of the mean distance.
pub fn aggregate_latent(a_in: ArrayView1<f64>, a: ArrayView2<f64>) -> Result<Array1<f64>> {
    if a.nrows() == 0 {
        return Err(Error::argument("no playlist rows to aggregate"));
    }
    if a.ncols() != a_in.len() {
        return Err(Error::argument("latent dimension mismatch"));
    }
    let d2: Vec<f64> =
        a.rows().into_iter().map(|row| row.iter().zip(a_in).map(|(x, y)| (x - y) * (x - y)).sum()).collect();
    let sigma = d2.iter().map(|v| v.sqrt()).sum::<f64>() / d2.len() as f64 / 4.0;
    if sigma == 0.0 {
        return Ok(a.row(0).to_owned());
    }
    // Shift by the nearest distance so the largest weight is exactly 1;
    // the normalization cancels the shift.
    let dmin = d2.iter().copied().fold(f64::INFINITY, f64::min);
    let s2 = sigma * sigma;
    let w: Vec<f64> = d2.iter().map(|d| (-(d - dmin) / s2).exp()).collect();
    let total: f64 = w.iter().sum();
    let mut out = Array1::zeros(a.ncols());
    for (row, wi) in a.rows().into_iter().zip(&w) {
        out.scaled_add(*wi / total, &row);
    }
    Ok(out)
}

/// The factor-model recommender: project, aggregate, then `c_rec = a_rec B`.
#[derive(Debug, Clone)]
pub struct LatentRecommender {
    a: Array2<f64>,
    b: Array2<f64>,
    bbt: Array2<f64>,
    pub epsilon_ridge: f64,
    pub epsilon_mask: f64,
    name: String,
}

impl LatentRecommender {
    pub fn new(model: &Factorization) -> Self {
        Self::from_factors(model.a.clone(), model.b.clone())
    }

    pub fn from_factors(a: Array2<f64>, b: Array2<f64>) -> Self {
        let bbt = gram(b.view());
        Self { a, b, bbt, epsilon_ridge: DEFAULT_RIDGE, epsilon_mask: DEFAULT_EPSILON, name: "model".into() }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_epsilons(mut self, ridge: f64, mask: f64) -> Self {
        self.epsilon_ridge = ridge;
        self.epsilon_mask = mask;
        self
    }
}

impl Scorer for LatentRecommender {
    fn name(&self) -> &str {
        &self.name
    }

    fn n_songs(&self) -> usize {
        self.b.ncols()
    }

    fn score(&self, query: &Query) -> Result<Scores> {
        let a_in =
            project_with_gram(&query.seeds, self.b.view(), self.bbt.view(), self.epsilon_ridge, self.epsilon_mask)?;
        let a_rec = aggregate_latent(a_in.view(), self.a.view())?;
        let scores = a_rec.dot(&self.b);
        Ok(Scores { scores, a_in: Some(a_in), a_rec: Some(a_rec), no_signal: false })
    }
}
