use ndarray::{Array1, Array2};
use proptest::prelude::*;
use rand::Rng;
use recog::recommender::*;
use recog::rng;

fn random_factors(seed: u64, n: usize, m: usize, r: usize) -> (Array2<f64>, Array2<f64>) {
    let mut g = rng::stream(seed, 70);
    let a = Array2::from_shape_fn((n, r), |_| g.random::<f64>());
    let b = Array2::from_shape_fn((r, m), |_| g.random::<f64>());
    (a, b)
}

/// Weighted ridge objective straight from its definition.
fn ridge_objective(a: &Array1<f64>, b: &Array2<f64>, seeds: &[usize], ridge: f64, mask: f64) -> f64 {
    let fit = a.dot(b);
    let mut s = ridge * a.dot(a);
    for j in 0..b.ncols() {
        let (w, c) = if seeds.contains(&j) { (1.0, 1.0) } else { (mask, 0.0) };
        s += w * (c - fit[j]) * (c - fit[j]);
    }
    s
}

#[test]
fn projection_satisfies_normal_equations() {
    for seed in 0..10 {
        let (_, b) = random_factors(seed, 1, 40, 6);
        let seeds = [3, 17, 29];
        let a = project_query(&seeds, b.view(), 0.01, 0.1).unwrap();
        let d = Array1::from_shape_fn(40, |j| if seeds.contains(&j) { 1.0 } else { 0.1 });
        let c = Array1::from_shape_fn(40, |j| if seeds.contains(&j) { 1.0 } else { 0.0 });
        let bd = &b * &d;
        let lhs = bd.dot(&b.t()).dot(&a) + 0.01 * &a;
        let rhs = bd.dot(&c);
        let res = (&lhs - &rhs).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(res <= 1e-10, "residual {res:e}");
    }
}

#[test]
fn projection_is_a_minimizer() {
    let mut g = rng::stream(5, 71);
    for seed in 0..5 {
        let (_, b) = random_factors(seed, 1, 30, 5);
        let seeds = [0, 9, 21];
        let a = project_query(&seeds, b.view(), 0.01, 0.1).unwrap();
        let f0 = ridge_objective(&a, &b, &seeds, 0.01, 0.1);
        for _ in 0..20 {
            let mut dir = Array1::from_shape_fn(5, |_| g.random_range(-1.0..1.0));
            let norm: f64 = dir.dot(&dir);
            dir /= norm.sqrt();
            let moved = &a + &(1e-3 * &dir);
            assert!(ridge_objective(&moved, &b, &seeds, 0.01, 0.1) >= f0);
        }
    }
}

#[test]
fn recommendations_are_deterministic_and_exclude_seeds() {
    let (a, b) = random_factors(1, 50, 80, 4);
    let r1 = LatentRecommender::from_factors(a.clone(), b.clone());
    let r2 = LatentRecommender::from_factors(a, b.clone());
    let q = Query::new(vec![4, 40, 79]);
    let x = recommend(&r1, &q, 30).unwrap();
    let y = recommend(&r2, &q, 30).unwrap();
    assert_eq!(x, y);
    assert_eq!(x.top_k.len(), 30);
    assert!(!x.truncated);
    assert!(x.indices().iter().all(|j| !q.seeds.contains(j)));
    for w in x.top_k.windows(2) {
        assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
    }
    assert_eq!(x.scores, x.a_rec.as_ref().unwrap().dot(&b));
}

#[test]
fn short_catalogues_truncate() {
    let (a, b) = random_factors(2, 5, 6, 2);
    let rec = LatentRecommender::from_factors(a, b);
    let out = recommend(&rec, &Query::new(vec![0, 1]), 30).unwrap();
    assert!(out.truncated);
    assert_eq!(out.top_k.len(), 4);
    assert!(recommend(&rec, &Query::new(vec![6]), 3).is_err());
    assert!(recommend(&rec, &Query::new(vec![0]), 0).is_err());
}

proptest! {
    #[test]
    fn aggregate_stays_in_row_hull(seed in 0u64..1000, n in 1usize..30, r in 1usize..6, scale in 0.01f64..100.0) {
        let mut g = rng::stream(seed, 72);
        let a = Array2::from_shape_fn((n, r), |_| g.random::<f64>() * scale);
        let q = Array1::from_shape_fn(r, |_| g.random::<f64>() * scale * 2.0);
        let out = aggregate_latent(q.view(), a.view()).unwrap();
        for k in 0..r {
            let col = a.column(k);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(out[k] >= lo - 1e-12 * scale && out[k] <= hi + 1e-12 * scale);
        }
    }
}
