//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use rand::Rng;
use recog::graph::WeightedGraph;
use recog::rng;

/// `argmin_z (ω z − ω c log z)/σ + (z − u)²/2` over `z ≥ 0`, by bisection on
/// the monotone stationarity equation followed by Newton polishing.
pub fn kl_primal_prox(u: f64, omega: f64, c: f64, sigma: f64) -> f64 {
    if c == 0.0 {
        return (u - omega / sigma).max(0.0);
    }
    let g = |z: f64| (omega - omega * c / z) / sigma + z - u;
    let (mut lo, mut hi) = (0.0f64, u.max(0.0) + c + 1.0);
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..5 {
        let d = omega * c / (sigma * z * z) + 1.0;
        let next = z - g(z) / d;
        if next > 0.0 {
            z = next;
        }
    }
    z
}

/// `argmin_z θ|z|/σ + (z − u)²/2` by bisection on the monotone
/// subdifferential `z − u + (θ/σ)·∂|z|`.
pub fn abs_primal_prox(u: f64, theta: f64, sigma: f64) -> f64 {
    let k = theta / sigma;
    // Lower and upper ends of the subdifferential at z.
    let lo_end = |z: f64| z - u + if z > 0.0 { k } else { -k };
    let hi_end = |z: f64| z - u + if z < 0.0 { -k } else { k };
    if lo_end(0.0) <= 0.0 && hi_end(0.0) >= 0.0 {
        return 0.0;
    }
    let (mut a, mut b) = (-u.abs() - k - 1.0, u.abs() + k + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if lo_end(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// `argmin_z θ z²/(2σ) + (z − u)²/2`.
pub fn quadratic_primal_prox(u: f64, theta: f64, sigma: f64) -> f64 {
    sigma * u / (sigma + theta)
}

/// Conjugate prox through the Moreau identity `y − σ prox_{F/σ}(y/σ)`.
pub fn moreau(y: f64, sigma: f64, primal: impl Fn(f64) -> f64) -> f64 {
    y - sigma * primal(y / sigma)
}

/// Weighted KL fidelity, straight from the definition.
pub fn kl_fidelity(c: ArrayView2<f64>, omega: ArrayView2<f64>, ab: ArrayView2<f64>) -> f64 {
    let mut s = 0.0;
    for ((&c, &w), &z) in c.iter().zip(omega.iter()).zip(ab.iter()) {
        s += w * z;
        if c > 0.0 {
            s -= w * c * ((z.max(1e-12) / c).ln() + 1.0);
        }
    }
    s
}

/// `½ Σ_u Σ_{v ∈ N(u)} w_uv ‖x_u − x_v‖₁` with node signals as rows of `x`.
pub fn tv_rows(graph: &WeightedGraph, x: ArrayView2<f64>) -> f64 {
    let mut s = 0.0;
    for u in 0..graph.n_nodes() {
        for (v, w) in graph.neighbors(u) {
            let d: f64 = x.row(u).iter().zip(x.row(v)).map(|(a, b)| (a - b).abs()).sum();
            s += 0.5 * w * d;
        }
    }
    s
}

/// Seeded 10×10 subproblem instance: binary `C`, mask 1/0.1, positive
/// factors and a sparse random graph over the columns.
pub struct Instance {
    pub c: Array2<f64>,
    pub omega: Array2<f64>,
    pub a: Array2<f64>,
    pub b: Array2<f64>,
    pub graph: WeightedGraph,
}

pub fn random_instance(seed: u64, n: usize, m: usize, r: usize) -> Instance {
    let mut g = rng::stream(seed, 50);
    let c = Array2::from_shape_fn((n, m), |_| if g.random::<f64>() < 0.3 { 1.0 } else { 0.0 });
    let omega = c.mapv(|v| if v > 0.0 { 1.0 } else { 0.1 });
    let a = Array2::from_shape_fn((n, r), |_| g.random_range(0.1..1.0));
    let b = Array2::from_shape_fn((r, m), |_| g.random_range(0.1..1.0));
    let mut edges = vec![];
    for u in 0..m {
        for v in u + 1..m {
            if g.random::<f64>() < 0.3 {
                edges.push((u, v, g.random_range(0.1..1.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, m - 1, 1.0));
    }
    Instance { c, omega, a, b, graph: WeightedGraph::new(m, edges).unwrap() }
}
