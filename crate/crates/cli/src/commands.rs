use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use recog::dataset::{
    load_corpus, load_features, load_split, save_corpus, save_features, save_split, synthesize_corpus,
    train_test_split, PlaylistCorpus, SplitSpec, WeightMask,
};
use recog::evaluation::{
    evaluate, generate_queries, grid_search, save_category_table, save_report, validation_queries, EvalReport,
    Prepared, RandomScorer,
};
use recog::graph::{
    build_playlist_graph, build_song_graph, knn_label_accuracy, load_graph, modularity, save_graph, WeightedGraph,
};
use recog::recommender::{recommend, CosineRecommender, LatentRecommender, Query, Recommendation, Scorer};
use recog::solver::{load_model, save_model, Factorization, ModelMeta, Regularizer, SolverConfig};
use serde::Serialize;
use serde_json::json;

use crate::error::CliError;
use crate::manifest::ManifestBuilder;
use crate::settings::*;

fn out_dir(settings: &Settings) -> Result<PathBuf, CliError> {
    let dir = settings.out_dir.clone().ok_or_else(|| CliError::config("missing --out-dir"))?;
    fs::create_dir_all(&dir).map_err(|e| CliError::config(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(p) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(p).map_err(|e| CliError::config(format!("cannot create {}: {e}", p.display())))?;
    }
    Ok(())
}

fn print_summary(value: serde_json::Value) {
    println!("{value}");
}

pub fn synth(settings: &Settings) -> Result<(), CliError> {
    let dir = out_dir(settings)?;
    let cfg = settings.synth_config();
    let (corpus, features) = synthesize_corpus(&cfg)?;
    let corpus_path = dir.join(CORPUS_FILE);
    let features_path = dir.join(FEATURES_FILE);
    save_corpus(&corpus, &corpus_path)?;
    save_features(&features, &features_path)?;
    let mut m = ManifestBuilder::new("synth", settings);
    m.output(&corpus_path).output(&features_path);
    m.write()?;
    print_summary(json!({ "playlists": corpus.n(), "songs": corpus.m(), "entries": corpus.nnz() }));
    Ok(())
}

pub fn ingest(settings: &Settings) -> Result<(), CliError> {
    let dir = out_dir(settings)?;
    let src = settings.input(&settings.playlists, "playlists", CORPUS_FILE)?;
    let feature_src = match &settings.features {
        Some(p) if p.is_file() => Some(p.clone()),
        Some(p) => return Err(CliError::config(format!("--features: no such file {}", p.display()))),
        None => None,
    };
    let corpus = load_corpus(&src)?;
    let mut m = ManifestBuilder::new("ingest", settings);
    m.input(&src)?;
    let corpus_path = dir.join(CORPUS_FILE);
    if corpus_path == src {
        return Err(CliError::config("ingest would overwrite its input; choose another --out-dir"));
    }
    save_corpus(&corpus, &corpus_path)?;
    m.output(&corpus_path);
    let mut dropped = Vec::new();
    if let Some(fp) = feature_src {
        let features =
            load_features(&fp, settings.impute_mean.unwrap_or(false))?.align_to(corpus.song_ids())?.standardized()?;
        dropped = features.dropped.clone();
        let features_path = dir.join(FEATURES_FILE);
        if features_path == fp {
            return Err(CliError::config("ingest would overwrite its input; choose another --out-dir"));
        }
        m.input(&fp)?;
        save_features(&features, &features_path)?;
        m.output(&features_path);
    }
    m.write()?;
    print_summary(json!({
        "playlists": corpus.n(),
        "songs": corpus.m(),
        "entries": corpus.nnz(),
        "density": corpus.density(),
        "dropped_features": dropped,
    }));
    Ok(())
}

fn category_partition(train: &PlaylistCorpus) -> Vec<usize> {
    let labels = train.category_labels();
    let pos: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    (0..train.n()).map(|i| pos[train.category(i)]).collect()
}

pub fn build_graphs(settings: &Settings) -> Result<(), CliError> {
    let corpus_path = settings.input(&settings.corpus, "corpus", CORPUS_FILE)?;
    let features_path = settings.input(&settings.features, "features", FEATURES_FILE)?;
    let split_path = settings.path(&settings.split, "split", SPLIT_FILE)?;
    let pg_path = settings.path(&settings.playlist_graph, "playlist-graph", PLAYLIST_GRAPH_FILE)?;
    let sg_path = settings.path(&settings.song_graph, "song-graph", SONG_GRAPH_FILE)?;
    let cfg = settings.pipeline_config();
    if cfg.knn == 0 {
        return Err(CliError::config("--knn must be positive"));
    }

    let mut m = ManifestBuilder::new("build-graphs", settings);
    m.input(&corpus_path)?.input(&features_path)?;
    let corpus = load_corpus(&corpus_path)?;
    let features = load_features(&features_path, settings.impute_mean.unwrap_or(false))?.align_to(corpus.song_ids())?;
    let features = if features.is_standardized() { features } else { features.standardized()? };

    let split = train_test_split(&corpus, cfg.train_fraction, cfg.split_seed)?;
    let train = corpus.subset(&split.train)?;
    let playlist_graph = build_playlist_graph(&train, &cfg.playlist_graph)?;
    let song_graph = build_song_graph(&features, cfg.knn)?;

    for p in [&split_path, &pg_path, &sg_path] {
        ensure_parent(p)?;
    }
    save_split(&split, &split_path)?;
    let upstream = m.upstream();
    let config_hash = m.config_hash();
    save_graph(
        &playlist_graph,
        &pg_path,
        "playlist",
        json!({ "config": cfg.playlist_graph, "config_hash": config_hash, "upstream": upstream }),
        Some(cfg.playlist_graph.seed),
    )?;
    save_graph(
        &song_graph,
        &sg_path,
        "song-knn",
        json!({ "k": cfg.knn, "config_hash": config_hash, "upstream": upstream }),
        None,
    )?;
    m.output(&split_path).output(&pg_path).output(&sg_path);
    m.write()?;

    let q = modularity(&playlist_graph, &category_partition(&train))?;
    let genre_accuracy = match &features.genres {
        Some(g) => Some(knn_label_accuracy(&song_graph, g)?),
        None => None,
    };
    print_summary(json!({
        "train_playlists": split.train.len(),
        "test_playlists": split.test.len(),
        "playlist_edges": playlist_graph.n_edges(),
        "song_edges": song_graph.n_edges(),
        "category_modularity": q,
        "genre_knn_accuracy": genre_accuracy,
    }));
    Ok(())
}

/// Corpus and split, with the split checked against the corpus.
fn corpus_and_split(settings: &Settings, m: &mut ManifestBuilder) -> Result<(PlaylistCorpus, SplitSpec), CliError> {
    let corpus_path = settings.input(&settings.corpus, "corpus", CORPUS_FILE)?;
    let split_path = settings.input(&settings.split, "split", SPLIT_FILE)?;
    m.input(&corpus_path)?.input(&split_path)?;
    let corpus = load_corpus(&corpus_path)?;
    let split = load_split(&split_path)?;
    split.validate(corpus.n())?;
    Ok((corpus, split))
}

fn graph_input(path: &Path, nodes: usize, what: &str) -> Result<WeightedGraph, CliError> {
    let (g, _) = load_graph(path)?;
    if g.n_nodes() != nodes {
        return Err(CliError::data(format!("{what} graph has {} nodes, expected {nodes}", g.n_nodes())));
    }
    Ok(g)
}

pub fn train(settings: &Settings) -> Result<(), CliError> {
    let cfg = settings.solver_config()?;
    let grid = settings.grid()?;
    let pg_path = settings.input(&settings.playlist_graph, "playlist-graph", PLAYLIST_GRAPH_FILE)?;
    let sg_path = settings.input(&settings.song_graph, "song-graph", SONG_GRAPH_FILE)?;
    let model_path = settings.path(&settings.model, "model", MODEL_FILE)?;
    let epsilon = settings.epsilon();

    let mut m = ManifestBuilder::new("train", settings);
    let (corpus, split) = corpus_and_split(settings, &mut m)?;
    m.input(&pg_path)?.input(&sg_path)?;
    let train = corpus.subset(&split.train)?;
    let prepared = Prepared {
        playlist_graph: graph_input(&pg_path, train.n(), "playlist")?,
        song_graph: graph_input(&sg_path, train.m(), "song")?,
        c: train.to_dense(),
        omega: WeightMask::new(epsilon)?.to_dense(&train),
        split,
        train,
    };
    let validation = validation_queries(&prepared.train, settings.validation_per_category(), settings.root_seed())?;

    let (cfg, grid_result) = match grid {
        Some((ta, tb)) => {
            let g = grid_search(&prepared, &cfg, &ta, &tb, &validation)?;
            (SolverConfig { theta_a: g.theta_a, theta_b: g.theta_b, ..cfg }, Some(g))
        }
        None => (cfg, None),
    };
    let model = recog::evaluation::train_model(&prepared, &cfg, None, Some(&validation))?;

    ensure_parent(&model_path)?;
    let meta = ModelMeta {
        playlist_ids: prepared.train.playlist_ids().to_vec(),
        song_ids: prepared.train.song_ids().to_vec(),
        extra: json!({
            "config_hash": m.config_hash(),
            "epsilon": epsilon,
            "split_seed": prepared.split.seed,
            "upstream": m.upstream(),
        }),
    };
    save_model(&model_path, &model, &meta)?;
    m.output(&model_path);
    if let Some(g) = &grid_result {
        let grid_path = with_suffix(&model_path, ".grid.json");
        write_json(&grid_path, g)?;
        m.output(&grid_path);
    }
    m.write()?;
    print_summary(json!({
        "fingerprint": model.fingerprint(),
        "theta_a": cfg.theta_a,
        "theta_b": cfg.theta_b,
        "outer_iterations": model.report.outer_iterations,
        "best_outer": model.report.best_outer,
        "stopped_early": model.report.stopped_early,
        "objective": model.report.objective.last(),
        "validation_mpr": model.report.validation.iter().copied().reduce(f64::min),
    }));
    Ok(())
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn model_input(path: &Path) -> Result<(Factorization, ModelMeta), CliError> {
    Ok(load_model(path)?)
}

pub fn evaluate_cmd(settings: &Settings) -> Result<(), CliError> {
    let spec = settings.query_spec()?;
    let mut m = ManifestBuilder::new("evaluate", settings);
    let (corpus, split) = corpus_and_split(settings, &mut m)?;
    let report_path = settings.path(&settings.report, "report", REPORT_FILE)?;
    let train = corpus.subset(&split.train)?;
    let queries = generate_queries(&spec, &corpus, &split)?;

    let scorer: Box<dyn Scorer> = match (settings.baseline.as_deref(), &settings.model) {
        (Some("cosine"), _) => Box::new(CosineRecommender::new(&train, settings.t())?),
        (Some("random"), _) => Box::new(RandomScorer::new(corpus.m(), settings.root_seed())),
        (Some(other), _) => return Err(CliError::config(format!("--baseline: unknown baseline {other:?}"))),
        (None, _) => {
            let path = settings.input(&settings.model, "model", MODEL_FILE)?;
            m.input(&path)?;
            let (model, meta) = model_input(&path)?;
            if meta.playlist_ids != train.playlist_ids() || meta.song_ids != train.song_ids() {
                return Err(CliError::data("model was not trained on this corpus and split"));
            }
            let name = match model.config.regularizer {
                Regularizer::Tv => "tv",
                Regularizer::Tikhonov => "gnmf",
                Regularizer::None => "nmf",
            };
            Box::new(
                LatentRecommender::new(&model)
                    .with_name(name)
                    .with_epsilons(settings.epsilon_ridge(), settings.epsilon()),
            )
        }
    };

    let mut report: EvalReport = evaluate(scorer.as_ref(), &queries, &train, spec.k)?;
    report.metadata = json!({
        "query_spec": spec,
        "config_hash": m.config_hash(),
        "upstream": m.upstream(),
    });
    ensure_parent(&report_path)?;
    save_report(&report, &report_path)?;
    let table_path = report_path.with_extension("csv");
    save_category_table(&[&report], &table_path)?;
    m.output(&report_path).output(&table_path);
    m.write()?;
    print_summary(json!({
        "model": report.model,
        "queries": report.records.len(),
        "mean_mpr": report.mean_mpr,
        "mean_accuracy": report.mean_accuracy,
    }));
    Ok(())
}

/// A model ready to answer queries by song id.
pub struct Service {
    pub recommender: LatentRecommender,
    pub song_ids: Vec<String>,
    index: HashMap<String, usize>,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedSong {
    pub rank: usize,
    pub song_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecommendationOut {
    pub model: String,
    pub seeds: Vec<String>,
    pub k: usize,
    pub truncated: bool,
    pub no_signal: bool,
    pub recommendations: Vec<RankedSong>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<Vec<f64>>,
}

/// Request failures the service reports to callers.
#[derive(Debug, Clone, PartialEq)]
pub enum QueryError {
    UnknownSong(String),
    Invalid(String),
    Numeric(String),
}

impl Service {
    pub fn load(path: &Path, settings: &Settings) -> Result<Self, CliError> {
        let (model, meta) = model_input(path)?;
        let eps = meta.extra.get("epsilon").and_then(|v| v.as_f64()).unwrap_or(settings.epsilon());
        let index = meta.song_ids.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Ok(Self {
            fingerprint: model.fingerprint(),
            recommender: LatentRecommender::new(&model).with_epsilons(settings.epsilon_ridge(), eps),
            song_ids: meta.song_ids,
            index,
        })
    }

    pub fn query(&self, song_ids: &[String], k: usize, full: bool) -> Result<RecommendationOut, QueryError> {
        let mut seeds = Vec::with_capacity(song_ids.len());
        for id in song_ids {
            match self.index.get(id) {
                Some(&j) => seeds.push(j),
                None => return Err(QueryError::UnknownSong(id.clone())),
            }
        }
        let rec: Recommendation = recommend(&self.recommender, &Query::new(seeds), k).map_err(|e| match e {
            recog::Error::Numeric { .. } => QueryError::Numeric(e.to_string()),
            e => QueryError::Invalid(e.to_string()),
        })?;
        let recommendations = rec
            .top_k
            .iter()
            .enumerate()
            .map(|(i, &(j, score))| RankedSong { rank: i + 1, song_id: self.song_ids[j].clone(), score })
            .collect();
        Ok(RecommendationOut {
            model: self.fingerprint.clone(),
            seeds: song_ids.to_vec(),
            k,
            truncated: rec.truncated,
            no_signal: rec.no_signal,
            recommendations,
            scores: full.then(|| rec.scores.to_vec()),
        })
    }
}

fn render(out: &RecommendationOut, format: &str, song_ids: &[String]) -> Result<String, CliError> {
    match format {
        "json" => Ok(serde_json::to_string_pretty(out)? + "\n"),
        "csv" => {
            let mut s = String::from("rank,song_id,score\n");
            for r in &out.recommendations {
                s.push_str(&format!("{},{},{:?}\n", r.rank, csv_field(&r.song_id), r.score));
            }
            if let Some(scores) = &out.scores {
                s.push_str("\nsong_id,score\n");
                for (id, v) in song_ids.iter().zip(scores) {
                    s.push_str(&format!("{},{:?}\n", csv_field(id), v));
                }
            }
            Ok(s)
        }
        other => Err(CliError::config(format!("--format: expected json or csv, got {other:?}"))),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn recommend_cmd(settings: &Settings) -> Result<(), CliError> {
    let path = settings.input(&settings.model, "model", MODEL_FILE)?;
    let songs: Vec<String> = settings
        .songs
        .as_deref()
        .ok_or_else(|| CliError::config("missing --songs"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    let format = settings.format.clone().unwrap_or_else(|| "json".into());
    let service = Service::load(&path, settings)?;
    let out = service.query(&songs, settings.k(), settings.full_scores.unwrap_or(false)).map_err(|e| match e {
        QueryError::UnknownSong(id) => CliError::data(format!("unknown song id {id:?}")),
        QueryError::Invalid(msg) => CliError::data(msg),
        QueryError::Numeric(msg) => CliError { kind: crate::error::ErrorKind::Numeric, message: msg },
    })?;
    let text = render(&out, &format, &service.song_ids)?;
    match &settings.out {
        Some(o) => {
            ensure_parent(o)?;
            fs::write(o, &text)?;
            let mut m = ManifestBuilder::new("recommend", settings);
            m.input(&path)?;
            m.output(o);
            m.write()?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
