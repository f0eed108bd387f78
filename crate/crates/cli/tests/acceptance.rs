//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs under `cargo test`; the process exits 0 either way so the workspace
//! suite stays usable. Set `RECOG_ACCEPTANCE_STRICT=1` to exit 1 on any FAIL.

#[path = "../../core/tests/support/oracles.rs"]
mod oracles;

use std::process::Command;
use std::time::{Duration, Instant};

use ndarray::{arr2, Array2};
use oracles::{abs_primal_prox, kl_primal_prox, moreau, random_instance};
use rand::Rng;
use recog::dataset::{synthesize_corpus, SynthConfig};
use recog::evaluation::{
    evaluate, generate_queries, prepare, train_model, validation_queries, ModelKind, PipelineConfig, QueryKind,
    QuerySpec, RandomScorer, DEFAULT_VALIDATION_PER_CATEGORY,
};
use recog::graph::{
    build_playlist_graph, gradient_operator, modularity, operator_norm, tv_seminorm, Orientation, PlaylistGraphConfig,
    WeightedGraph,
};
use recog::recommender::{recommend, LatentRecommender, Query, Scorer};
use recog::rng;
use recog::solver::{
    nndsvd, prox_kl_conj_scalar, prox_tv_conj, solve_from, solve_subproblem_b, GraphPenalty, InnerOptions, Regularizer,
    SolverConfig, TrainingData, ZeroFill,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed <= budget, format!("{:.2}s of {}s", elapsed.as_secs_f64(), budget.as_secs()))
}

fn prox_oracles() -> Outcome {
    let start = Instant::now();
    let mut g = rng::stream(101, 0);
    let (mut kl_worst, mut tv_worst) = (0.0f64, 0.0f64);
    let mut clip_exact = true;
    for i in 0..1000 {
        let y = g.random_range(-5.0..5.0);
        let w = if i % 2 == 0 { 1.0 } else { g.random_range(0.05..2.0) };
        let c = match i % 3 {
            0 => 0.0,
            1 => 1.0,
            _ => g.random_range(0.1..3.0),
        };
        let s = g.random_range(0.05..4.0);
        let got = prox_kl_conj_scalar(y, w, c, s);
        kl_worst = kl_worst.max((got - moreau(y, s, |u| kl_primal_prox(u, w, c, s))).abs());

        let theta = g.random_range(0.0..3.0);
        let tv = prox_tv_conj(arr2(&[[y]]).view(), theta).unwrap()[[0, 0]];
        tv_worst = tv_worst.max((tv - moreau(y, s, |u| abs_primal_prox(u, theta, s))).abs());
        clip_exact &= tv.to_bits() == y.clamp(-theta, theta).to_bits();
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(5));
    outcome(
        kl_worst <= 1e-8 && tv_worst <= 1e-8 && clip_exact && fast,
        format!("KL max dev {kl_worst:.1e}, TV max dev {tv_worst:.1e}, clip exact {clip_exact}, {time}"),
    )
}

fn random_graph(g: &mut impl Rng, n: usize) -> WeightedGraph {
    let p = g.random_range(0.05..0.6);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if g.random::<f64>() < p {
                edges.push((u, v, g.random_range(0.01..5.0)));
            }
        }
    }
    if edges.is_empty() {
        edges.push((0, n - 1, 1.0));
    }
    WeightedGraph::new(n, edges).unwrap()
}

fn tv_operator_equivalence() -> Outcome {
    let start = Instant::now();
    let mut g = rng::stream(102, 0);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = g.random_range(2..=50);
        let graph = random_graph(&mut g, n);
        let r = g.random_range(1..=6);
        let x = Array2::from_shape_fn((n, r), |_| g.random_range(-3.0..3.0));
        let tv = tv_seminorm(&graph, x.view(), Orientation::RowsAreNodes).unwrap();
        let k = gradient_operator(&graph).unwrap().apply(x.view());
        let l1: f64 = k.iter().map(|v| v.abs()).sum();
        let rel = if l1 == 0.0 { tv.abs() } else { (tv - l1).abs() / l1 };
        worst = worst.max(rel);
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(10));
    outcome(worst <= 1e-10 && fast, format!("max rel dev {worst:.1e} over 100 graphs, {time}"))
}

fn subproblem_convergence() -> Outcome {
    let start = Instant::now();
    let (mut worst, mut monotone) = (0.0f64, 0);
    for seed in 0..20 {
        let inst = random_instance(seed, 10, 10, 3);
        let op = gradient_operator(&inst.graph).unwrap();
        let op_norm = operator_norm(&op, 1e-10, 10_000).unwrap().value;
        let pen = Some(GraphPenalty { op: &op, op_norm, theta: 1.0, kind: Regularizer::Tv });
        let run = |iters| {
            let opts = InnerOptions { max_iters: iters, tol: 0.0, record_trace: true, ..Default::default() };
            solve_subproblem_b(inst.a.view(), inst.b.clone(), inst.c.view(), inst.omega.view(), pen, &opts).unwrap()
        };
        let reference = *run(5000).trace.last().unwrap();
        let short = run(500);
        worst = worst.max((short.trace[499] - reference).abs() / reference.abs());
        if short.trace[400..].windows(2).all(|w| w[1] <= w[0] + 1e-9) {
            monotone += 1;
        }
    }
    let (fast, time) = within(start.elapsed(), Duration::from_secs(120));
    outcome(
        worst <= 1e-3 && monotone == 20 && fast,
        format!("max rel err @500 {worst:.1e}, non-increasing tails {monotone}/20, {time}"),
    )
}

fn reduction_consistency() -> Outcome {
    let synth = SynthConfig { n_playlists: 80, n_songs: 160, n_categories: 4, seed: 3, ..Default::default() };
    let (corpus, features) = synthesize_corpus(&synth).unwrap();
    let prepared = prepare(&corpus, &features, &PipelineConfig { split_seed: 3, ..Default::default() }).unwrap();
    let validation = validation_queries(&prepared.train, 10, 3).unwrap();
    let base = SolverConfig { rank: 6, outer_iters: 8, ..Default::default() };
    let fit = |reg, ta, tb| {
        let cfg = SolverConfig { regularizer: reg, theta_a: ta, theta_b: tb, ..base.clone() };
        train_model(&prepared, &cfg, None, Some(&validation)).unwrap()
    };
    let reference = fit(Regularizer::None, 0.0, 0.0);
    let same = |f: &recog::solver::Factorization| {
        f.a == reference.a && f.b == reference.b && f.report.objective == reference.report.objective
    };
    let zero_tv = same(&fit(Regularizer::Tv, 0.0, 0.0));
    let zero_gnmf = same(&fit(Regularizer::Tikhonov, 0.0, 0.0));
    let nmf_baseline = same(&fit(ModelKind::Nmf.regularizer(), base.theta_a, base.theta_b));
    outcome(
        zero_tv && zero_gnmf && nmf_baseline,
        format!("θ=0 TV identical {zero_tv}, θ=0 GNMF identical {zero_gnmf}, NMF baseline identical {nmf_baseline}"),
    )
}

fn brute_force_mpr(scores: &[f64], seeds: &[usize], hidden: &[usize]) -> f64 {
    let candidates: Vec<usize> = (0..scores.len()).filter(|j| !seeds.contains(j)).collect();
    let denom = (candidates.len() - 1).max(1) as f64;
    let mut total = 0.0;
    for &h in hidden {
        let before = candidates
            .iter()
            .filter(|&&c| c != h && (scores[c] > scores[h] || (scores[c] == scores[h] && c < h)))
            .count();
        total += before as f64 / denom;
    }
    total / hidden.len() as f64
}

/// Every subset of `0..n` with `1..=max` members.
fn small_subsets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (1u32..1 << n)
        .filter(|mask| mask.count_ones() as usize <= max)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

fn mpr_oracle() -> Outcome {
    // Candidates 2..=8, with and without a seed; scores over {0, 1, 2} so
    // ties are everywhere.
    let mut checked = 0usize;
    let mut mismatches = 0usize;
    for candidates in 2..=8usize {
        for n_seeds in 0..=1usize {
            let m = candidates + n_seeds;
            let seeds: Vec<usize> = (0..n_seeds).map(|i| (i * 5 + 1) % m).collect();
            let free: Vec<usize> = (0..m).filter(|j| !seeds.contains(j)).collect();
            let hidden_sets: Vec<Vec<usize>> =
                small_subsets(free.len(), 3).into_iter().map(|s| s.into_iter().map(|i| free[i]).collect()).collect();
            for code in 0..3usize.pow(m as u32) {
                let scores: Vec<f64> = (0..m).map(|j| ((code / 3usize.pow(j as u32)) % 3) as f64).collect();
                for hidden in &hidden_sets {
                    let got = recog::evaluation::mpr(&scores, &seeds, hidden).unwrap();
                    if got != brute_force_mpr(&scores, &seeds, hidden) {
                        mismatches += 1;
                    }
                    checked += 1;
                }
            }
        }
    }

    let synth = SynthConfig { seed: 5, ..Default::default() };
    let (corpus, features) = synthesize_corpus(&synth).unwrap();
    let prepared = prepare(&corpus, &features, &PipelineConfig { split_seed: 5, ..Default::default() }).unwrap();
    let spec = QuerySpec { kind: QueryKind::Test, count: 300, seeds_per_query: 3, k: 30, seed: 5 };
    let queries = generate_queries(&spec, &corpus, &prepared.split).unwrap();
    let report = evaluate(&RandomScorer::new(corpus.m(), 5), &queries, &prepared.train, 30).unwrap();
    let random_mpr = report.mean_mpr.unwrap_or(f64::NAN);
    let n_test = report.records.iter().filter(|r| r.mpr.is_some()).count();
    outcome(
        mismatches == 0 && (random_mpr - 0.5).abs() <= 0.05 && n_test >= 200,
        format!("{mismatches} mismatches in {checked} exhaustive cases, random MPR {random_mpr:.4} over {n_test} Test queries"),
    )
}

struct RunResult {
    mpr: [f64; 3],
    accuracy: [f64; 3],
}

fn synthetic_ordering_run(seed: u64) -> RunResult {
    let synth = SynthConfig { seed, ..Default::default() };
    let (corpus, features) = synthesize_corpus(&synth).unwrap();
    let pipeline = PipelineConfig {
        split_seed: seed,
        playlist_graph: PlaylistGraphConfig { seed, ..Default::default() },
        ..Default::default()
    };
    let prepared = prepare(&corpus, &features, &pipeline).unwrap();
    let validation = validation_queries(&prepared.train, DEFAULT_VALIDATION_PER_CATEGORY, seed).unwrap();
    let base = SolverConfig { seed, ..Default::default() };
    let init = nndsvd(prepared.c.view(), base.rank, ZeroFill::Mean).unwrap();
    let spec = QuerySpec { kind: QueryKind::Sampled, count: 300, seeds_per_query: 3, k: 30, seed };
    let queries = generate_queries(&spec, &corpus, &prepared.split).unwrap();
    let mut mpr = [0.0; 3];
    let mut accuracy = [0.0; 3];
    for (i, kind) in [ModelKind::Tv, ModelKind::Nmf, ModelKind::Gnmf].into_iter().enumerate() {
        let cfg = SolverConfig { regularizer: kind.regularizer(), ..base.clone() };
        let model = train_model(&prepared, &cfg, Some(&init), Some(&validation)).unwrap();
        let rec = LatentRecommender::new(&model).with_name(kind.as_str());
        let report = evaluate(&rec, &queries, &prepared.train, 30).unwrap();
        mpr[i] = report.mean_mpr.unwrap();
        accuracy[i] = report.mean_accuracy;
    }
    RunResult { mpr, accuracy }
}

fn synthetic_ordering() -> Outcome {
    let start = Instant::now();
    let runs: Vec<RunResult> = (0..10).map(synthetic_ordering_run).collect();
    let mpr_vs_nmf = runs.iter().filter(|r| r.mpr[0] < r.mpr[1]).count();
    let mpr_vs_gnmf = runs.iter().filter(|r| r.mpr[0] < r.mpr[2]).count();
    let acc_vs_nmf = runs.iter().filter(|r| r.accuracy[0] > r.accuracy[1]).count();
    let mean = |f: &dyn Fn(&RunResult) -> f64| runs.iter().map(f).sum::<f64>() / runs.len() as f64;
    let (fast, time) = within(start.elapsed(), Duration::from_secs(15 * 60));
    outcome(
        mpr_vs_nmf >= 8 && mpr_vs_gnmf >= 8 && acc_vs_nmf >= 8 && fast,
        format!(
            "TV<NMF MPR {mpr_vs_nmf}/10, TV<GNMF MPR {mpr_vs_gnmf}/10, TV>NMF accuracy {acc_vs_nmf}/10 \
             (mean MPR tv {:.3} nmf {:.3} gnmf {:.3}; mean accuracy tv {:.3} nmf {:.3}), {time}",
            mean(&|r| r.mpr[0]),
            mean(&|r| r.mpr[1]),
            mean(&|r| r.mpr[2]),
            mean(&|r| r.accuracy[0]),
            mean(&|r| r.accuracy[1]),
        ),
    )
}

fn category_partition(corpus: &recog::dataset::PlaylistCorpus) -> Vec<usize> {
    let labels = corpus.category_labels();
    (0..corpus.n()).map(|i| labels.iter().position(|l| l == corpus.category(i)).unwrap()).collect()
}

fn graph_diagnostics() -> Outcome {
    let triangles =
        WeightedGraph::new(6, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0), (3, 4, 1.0), (4, 5, 1.0), (3, 5, 1.0)]).unwrap();
    let fixture = modularity(&triangles, &[0, 0, 0, 1, 1, 1]).unwrap();
    let mut wins = 0;
    let mut pairs = Vec::new();
    for seed in 0..10 {
        let synth = SynthConfig { seed, noise: 0.1, ..Default::default() };
        let (corpus, _) = synthesize_corpus(&synth).unwrap();
        let part = category_partition(&corpus);
        let q = |gamma1, gamma2| {
            let cfg = PlaylistGraphConfig { gamma1, gamma2, seed, ..Default::default() };
            modularity(&build_playlist_graph(&corpus, &cfg).unwrap(), &part).unwrap()
        };
        let (mixed, cosine) = (q(0.3, 0.7), q(0.0, 1.0));
        wins += usize::from(mixed > cosine);
        pairs.push(format!("{cosine:.2}->{mixed:.2}"));
    }
    outcome(
        fixture == 0.5 && wins >= 9,
        format!("two-triangle modularity {fixture}, category modularity up in {wins}/10 seeds [{}]", pairs.join(" ")),
    )
}

fn random_factors(g: &mut impl Rng, n: usize, m: usize, r: usize, scale: f64) -> (Array2<f64>, Array2<f64>) {
    let a = Array2::from_shape_fn((n, r), |_| g.random_range(0.0..scale));
    let b = Array2::from_shape_fn((r, m), |_| g.random_range(0.0..scale));
    (a, b)
}

/// Final objective from NNDSVD and the mean over 10 scale-matched random
/// starts, for one instance and configuration.
fn init_comparison(prepared: &recog::evaluation::Prepared, cfg: &SolverConfig, seed: u64) -> (f64, f64) {
    let data: TrainingData = prepared.training_data();
    let final_objective = |(a, b): (Array2<f64>, Array2<f64>)| {
        *solve_from(&data, cfg, a, b, None).unwrap().report.objective.last().unwrap()
    };
    let from_nndsvd = final_objective(nndsvd(prepared.c.view(), cfg.rank, ZeroFill::Mean).unwrap());
    // E[(AB)_ij] = mean(C) for these starts.
    let scale = 2.0 * (prepared.c.mean().unwrap() / cfg.rank as f64).sqrt();
    let mut g = rng::stream(seed, 200);
    let (n, m) = prepared.c.dim();
    let random_mean =
        (0..10).map(|_| final_objective(random_factors(&mut g, n, m, cfg.rank, scale))).sum::<f64>() / 10.0;
    (from_nndsvd, random_mean)
}

fn nndsvd_quality() -> Outcome {
    let mut deterministic = true;
    let (mut wins, mut tv_wins) = (0, 0);
    let mut gaps = Vec::new();
    for seed in 0..10 {
        let synth = SynthConfig { n_playlists: 80, n_songs: 160, n_categories: 4, seed, ..Default::default() };
        let (corpus, features) = synthesize_corpus(&synth).unwrap();
        let pipeline = PipelineConfig { split_seed: seed, ..Default::default() };
        let prepared = prepare(&corpus, &features, &pipeline).unwrap();
        let first = nndsvd(prepared.c.view(), 6, ZeroFill::Mean).unwrap();
        deterministic &= first == nndsvd(prepared.c.view(), 6, ZeroFill::Mean).unwrap();

        // The weighted-KL objective alone.
        let kl = SolverConfig {
            rank: 6,
            regularizer: Regularizer::None,
            theta_a: 0.0,
            theta_b: 0.0,
            seed,
            ..Default::default()
        };
        let (nd, random) = init_comparison(&prepared, &kl, seed);
        wins += usize::from(nd <= random);
        gaps.push(format!("{:+.2}%", 100.0 * (nd - random) / random));

        // Reported only: the TV-regularized objective at the default weights.
        let tv = SolverConfig { rank: 6, seed, ..Default::default() };
        let (nd, random) = init_comparison(&prepared, &tv, seed);
        tv_wins += usize::from(nd <= random);
    }
    outcome(
        deterministic && wins == 10,
        format!(
            "deterministic {deterministic}, NNDSVD <= random-init mean KL objective on {wins}/10 [{}]; \
             with the TV term included {tv_wins}/10",
            gaps.join(" ")
        ),
    )
}

fn recommendation_latency() -> Outcome {
    let (n, m, r) = (1000, 5000, 15);
    let mut g = rng::stream(109, 0);
    let (a, b) = random_factors(&mut g, n, m, r, 1.0);
    let rec = LatentRecommender::from_factors(a, b);
    let mut times = Vec::with_capacity(100);
    for _ in 0..100 {
        let seeds = rand::seq::index::sample(&mut g, m, 3).into_vec();
        let q = Query::new(seeds);
        let t = Instant::now();
        let out = recommend(&rec as &dyn Scorer, &q, 30).unwrap();
        times.push(t.elapsed());
        assert_eq!(out.top_k.len(), 30);
    }
    times.sort();
    let median = times[50];
    outcome(
        median < Duration::from_millis(50),
        format!("median {:.2} ms, max {:.2} ms over 100 calls at (1000, 5000, 15)", ms(median), ms(times[99])),
    )
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn run_pipeline(dir: &std::path::Path) -> Result<Vec<u8>, String> {
    let d = dir.to_str().unwrap();
    let steps: [&[&str]; 4] = [
        &["synth"],
        &["build-graphs"],
        &["train"],
        &["evaluate", "--queries", "sampled", "--num", "300", "--s", "3", "--k", "30"],
    ];
    for step in steps {
        let out = Command::new(env!("CARGO_BIN_EXE_recog"))
            .args(step)
            .args(["--out-dir", d, "--seed", "42"])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(String::from_utf8_lossy(&out.stderr).into_owned());
        }
    }
    std::fs::read(dir.join("report.json")).map_err(|e| e.to_string())
}

fn end_to_end_determinism() -> Outcome {
    let (x, y) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    match (run_pipeline(x.path()), run_pipeline(y.path())) {
        (Ok(a), Ok(b)) => outcome(a == b, format!("report.json {} bytes, identical {}", a.len(), a == b)),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("pipeline failed: {}", e.trim())),
    }
}

type Check = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Check; 10] = [
        ("prox oracles", prox_oracles),
        ("TV/operator equivalence", tv_operator_equivalence),
        ("subproblem convergence", subproblem_convergence),
        ("reduction consistency", reduction_consistency),
        ("MPR oracle", mpr_oracle),
        ("synthetic model ordering", synthetic_ordering),
        ("graph diagnostics", graph_diagnostics),
        ("NNDSVD determinism and quality", nndsvd_quality),
        ("recommendation latency", recommendation_latency),
        ("end-to-end determinism", end_to_end_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {:>2} {:<32} {}  {}", i + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var_os("RECOG_ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
