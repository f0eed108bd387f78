//! Flat run settings shared by the config file and the command line.

use std::path::{Path, PathBuf};

use recog::dataset::{SynthConfig, DEFAULT_EPSILON};
use recog::evaluation::{PipelineConfig, QueryKind, QuerySpec, DEFAULT_KNN, DEFAULT_VALIDATION_PER_CATEGORY};
use recog::graph::PlaylistGraphConfig;
use recog::recommender::{DEFAULT_K, DEFAULT_NEIGHBORS, DEFAULT_RIDGE, DEFAULT_SEEDS};
use recog::solver::{Regularizer, SolverConfig, StepRule};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

macro_rules! settings {
    ($( $(#[doc = $doc:expr])* $field:ident : $ty:ty, )*) => {
        /// Every key accepted in the config file; each is also a `--flag`.
        #[derive(Debug, Clone, Default, PartialEq, clap::Args, Serialize, Deserialize)]
        #[serde(rename_all = "kebab-case", deny_unknown_fields)]
        pub struct Settings {
            $(
                $(#[doc = $doc])*
                #[arg(long, global = true)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl Settings {
            /// Keys set in `over` replace those in `self`.
            pub fn overlay(self, over: Settings) -> Settings {
                Settings { $( $field: over.$field.or(self.$field), )* }
            }
        }
    };
}

settings! {
    /// Config file (flat TOML); command-line flags override it.
    config: PathBuf,
    /// Root seed; every random consumer derives its own stream from it.
    seed: u64,
    /// Directory holding the default artifact layout.
    out_dir: PathBuf,
    /// Playlist file (JSON lines).
    corpus: PathBuf,
    /// Song feature table (CSV).
    features: PathBuf,
    /// Raw playlist file for `ingest`.
    playlists: PathBuf,
    split: PathBuf,
    playlist_graph: PathBuf,
    song_graph: PathBuf,
    model: PathBuf,
    report: PathBuf,
    /// Output file for `recommend` (stdout when absent).
    out: PathBuf,

    n_playlists: usize,
    n_songs: usize,
    n_categories: usize,
    min_songs: usize,
    max_songs: usize,
    noise: f64,
    n_features: usize,
    separation: f64,

    /// Fill missing feature values with the column mean.
    impute_mean: bool,
    /// Weight of unobserved playlist entries.
    epsilon: f64,
    train_fraction: f64,

    gamma1: f64,
    gamma2: f64,
    category_edge_fraction: f64,
    knn: usize,
    top_q: usize,

    rank: usize,
    theta_a: f64,
    theta_b: f64,
    /// tv, tikhonov (alias gnmf) or none (alias nmf).
    reg: String,
    inner_iters: usize,
    inner_tol: f64,
    outer_iters: usize,
    patience: usize,
    validation_interval: usize,
    validation_per_category: usize,
    log_floor: f64,
    scaled_tv_clip: bool,
    /// preconditioned, chambolle-pock or arrow-hurwicz.
    step_rule: String,
    step_balance: f64,
    tv_scale: f64,
    /// Comma-separated θ_A values; enables grid search in `train`.
    grid_theta_a: String,
    grid_theta_b: String,

    /// random, test or sampled.
    queries: String,
    num: usize,
    s: usize,
    k: usize,
    /// Neighbor playlists for the cosine baseline.
    t: usize,
    /// Evaluate a baseline instead of a model: cosine or random.
    baseline: String,
    epsilon_ridge: f64,

    /// Comma-separated seed song ids.
    songs: String,
    /// json or csv.
    format: String,
    /// Include the full score vector in `recommend` output.
    full_scores: bool,

    host: String,
    port: u16,
}

/// Candidate θ_A and θ_B values for grid search.
pub type ThetaGrid = (Vec<f64>, Vec<f64>);

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const FEATURES_FILE: &str = "features.csv";
pub const SPLIT_FILE: &str = "split.json";
pub const PLAYLIST_GRAPH_FILE: &str = "playlist_graph.csv";
pub const SONG_GRAPH_FILE: &str = "song_graph.csv";
pub const MODEL_FILE: &str = "model.bin";
pub const REPORT_FILE: &str = "report.json";

fn parse_list(key: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::config(format!("{key}: cannot parse {v:?}"))))
        .collect()
}

impl Settings {
    /// Reads `path` as flat TOML, rejecting unknown keys.
    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let s: Settings = toml::from_str(&text)
            .map_err(|e| CliError::config(format!("config {}: {}", path.display(), e.message())))?;
        if s.config.is_some() {
            return Err(CliError::config("config files cannot include other configs"));
        }
        Ok(s)
    }

    /// The hyperparameters alone: paths and presentation switches removed, so
    /// the hash does not depend on where artifacts live.
    pub fn hyperparameters(&self) -> Settings {
        Settings {
            config: None,
            out_dir: None,
            corpus: None,
            features: None,
            playlists: None,
            split: None,
            playlist_graph: None,
            song_graph: None,
            model: None,
            report: None,
            out: None,
            format: None,
            host: None,
            port: None,
            ..self.clone()
        }
    }

    pub fn root_seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// An explicit path, else `name` under `--out-dir`.
    pub fn path(&self, explicit: &Option<PathBuf>, key: &str, name: &str) -> Result<PathBuf, CliError> {
        match (explicit, &self.out_dir) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(d)) => Ok(d.join(name)),
            (None, None) => Err(CliError::config(format!("missing --{key} (or --out-dir)"))),
        }
    }

    /// Like [`Settings::path`] but the file must already exist.
    pub fn input(&self, explicit: &Option<PathBuf>, key: &str, name: &str) -> Result<PathBuf, CliError> {
        let p = self.path(explicit, key, name)?;
        if !p.is_file() {
            return Err(CliError::config(format!("--{key}: no such file {}", p.display())));
        }
        Ok(p)
    }

    pub fn synth_config(&self) -> SynthConfig {
        let d = SynthConfig::default();
        SynthConfig {
            n_playlists: self.n_playlists.unwrap_or(d.n_playlists),
            n_songs: self.n_songs.unwrap_or(d.n_songs),
            n_categories: self.n_categories.unwrap_or(d.n_categories),
            min_songs: self.min_songs.unwrap_or(d.min_songs),
            max_songs: self.max_songs.unwrap_or(d.max_songs),
            noise: self.noise.unwrap_or(d.noise),
            n_features: self.n_features.unwrap_or(d.n_features),
            separation: self.separation.unwrap_or(d.separation),
            seed: self.root_seed(),
        }
    }

    pub fn pipeline_config(&self) -> PipelineConfig {
        let g = PlaylistGraphConfig::default();
        PipelineConfig {
            train_fraction: self.train_fraction.unwrap_or(0.7),
            split_seed: self.root_seed(),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            playlist_graph: PlaylistGraphConfig {
                gamma1: self.gamma1.unwrap_or(g.gamma1),
                gamma2: self.gamma2.unwrap_or(g.gamma2),
                category_edge_fraction: self.category_edge_fraction.unwrap_or(g.category_edge_fraction),
                seed: self.root_seed(),
                top_q: self.top_q,
            },
            knn: self.knn.unwrap_or(DEFAULT_KNN),
        }
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let d = SolverConfig::default();
        let regularizer = match &self.reg {
            Some(r) => r.parse::<Regularizer>().map_err(|e| CliError::config(format!("--reg: {e}")))?,
            None => d.regularizer,
        };
        let step_rule = match self.step_rule.as_deref() {
            None => d.step_rule,
            Some("preconditioned") => StepRule::Preconditioned,
            Some("chambolle-pock") => StepRule::ChambollePock,
            Some("arrow-hurwicz") => StepRule::ArrowHurwicz,
            Some(other) => return Err(CliError::config(format!("--step-rule: unknown rule {other:?}"))),
        };
        let cfg = SolverConfig {
            rank: self.rank.unwrap_or(d.rank),
            theta_a: self.theta_a.unwrap_or(d.theta_a),
            theta_b: self.theta_b.unwrap_or(d.theta_b),
            regularizer,
            inner_iters: self.inner_iters.unwrap_or(d.inner_iters),
            inner_tol: self.inner_tol.unwrap_or(d.inner_tol),
            outer_iters: self.outer_iters.unwrap_or(d.outer_iters),
            validation_interval: self.validation_interval.unwrap_or(d.validation_interval),
            patience: self.patience.unwrap_or(d.patience),
            log_floor: self.log_floor.unwrap_or(d.log_floor),
            scaled_tv_clip: self.scaled_tv_clip.unwrap_or(d.scaled_tv_clip),
            power_tol: d.power_tol,
            power_max_iters: d.power_max_iters,
            step_rule,
            step_balance: self.step_balance.unwrap_or(d.step_balance),
            tv_scale: self.tv_scale.unwrap_or(d.tv_scale),
            seed: self.root_seed(),
        };
        cfg.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn validation_per_category(&self) -> usize {
        self.validation_per_category.unwrap_or(DEFAULT_VALIDATION_PER_CATEGORY)
    }

    pub fn grid(&self) -> Result<Option<ThetaGrid>, CliError> {
        if self.grid_theta_a.is_none() && self.grid_theta_b.is_none() {
            return Ok(None);
        }
        let base = self.solver_config()?;
        let a = match &self.grid_theta_a {
            Some(t) => parse_list("--grid-theta-a", t)?,
            None => vec![base.theta_a],
        };
        let b = match &self.grid_theta_b {
            Some(t) => parse_list("--grid-theta-b", t)?,
            None => vec![base.theta_b],
        };
        Ok(Some((a, b)))
    }

    pub fn query_spec(&self) -> Result<QuerySpec, CliError> {
        let kind = match &self.queries {
            Some(q) => q.parse::<QueryKind>().map_err(|e| CliError::config(format!("--queries: {e}")))?,
            None => QueryKind::Sampled,
        };
        let spec = QuerySpec {
            kind,
            count: self.num.unwrap_or(300),
            seeds_per_query: self.s.unwrap_or(DEFAULT_SEEDS),
            k: self.k(),
            seed: self.root_seed(),
        };
        spec.validate().map_err(|e| CliError::config(e.to_string()))?;
        Ok(spec)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(DEFAULT_K)
    }

    pub fn t(&self) -> usize {
        self.t.unwrap_or(DEFAULT_NEIGHBORS)
    }

    pub fn epsilon_ridge(&self) -> f64 {
        self.epsilon_ridge.unwrap_or(DEFAULT_RIDGE)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(DEFAULT_EPSILON)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let file: Settings = toml::from_str("rank = 10\ntheta-a = 5.0\nreg = \"nmf\"").unwrap();
        let flags = Settings { rank: Some(15), ..Default::default() };
        let merged = file.overlay(flags);
        assert_eq!(merged.rank, Some(15));
        assert_eq!(merged.theta_a, Some(5.0));
        assert_eq!(merged.solver_config().unwrap().regularizer, Regularizer::None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("rnak = 3").is_err());
        assert!(toml::from_str::<Settings>("rank = \"three\"").is_err());
    }

    #[test]
    fn hyperparameters_ignore_paths() {
        let a = Settings { rank: Some(3), model: Some("a.bin".into()), ..Default::default() };
        let b = Settings { rank: Some(3), model: Some("b.bin".into()), ..Default::default() };
        assert_eq!(a.hyperparameters(), b.hyperparameters());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let s = Settings { rank: Some(0), ..Default::default() };
        assert_eq!(s.solver_config().unwrap_err().code(), 2);
        let s = Settings { reg: Some("l2".into()), ..Default::default() };
        assert!(s.solver_config().is_err());
        let s = Settings { queries: Some("all".into()), ..Default::default() };
        assert!(s.query_spec().is_err());
        let s = Settings { grid_theta_a: Some("1,x".into()), ..Default::default() };
        assert!(s.grid().is_err());
    }
}
