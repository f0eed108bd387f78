use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::metrics::mpr;
use super::queries::{sampled_query, CategoryIndex, EvalQuery};
use crate::dataset::{train_test_split, PlaylistCorpus, SongFeatures, SplitSpec, WeightMask, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::graph::{build_playlist_graph, build_song_graph, PlaylistGraphConfig, WeightedGraph};
use crate::recommender::{LatentRecommender, Scorer, DEFAULT_SEEDS};
use crate::rng;
use crate::solver::{nndsvd, solve_from, Factorization, Regularizer, SolverConfig, TrainingData, ZeroFill};

pub const DEFAULT_KNN: usize = 5;
pub const DEFAULT_VALIDATION_PER_CATEGORY: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train_fraction: f64,
    pub split_seed: u64,
    pub epsilon: f64,
    pub playlist_graph: PlaylistGraphConfig,
    pub knn: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.7,
            split_seed: 0,
            epsilon: DEFAULT_EPSILON,
            playlist_graph: PlaylistGraphConfig::default(),
            knn: DEFAULT_KNN,
        }
    }
}

/// Everything needed to train: the split, the training incidence and mask,
/// and both graphs.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub split: SplitSpec,
    pub train: PlaylistCorpus,
    pub c: Array2<f64>,
    pub omega: Array2<f64>,
    pub playlist_graph: WeightedGraph,
    pub song_graph: WeightedGraph,
}

impl Prepared {
    pub fn training_data(&self) -> TrainingData<'_> {
        TrainingData {
            c: self.c.view(),
            omega: self.omega.view(),
            playlist_graph: Some(&self.playlist_graph),
            song_graph: Some(&self.song_graph),
        }
    }
}

/// Splits `corpus`, then builds the training matrices and both graphs. Song
/// features are aligned to the corpus and standardized.
pub fn prepare(corpus: &PlaylistCorpus, features: &SongFeatures, cfg: &PipelineConfig) -> Result<Prepared> {
    let split = train_test_split(corpus, cfg.train_fraction, cfg.split_seed)?;
    prepare_with_split(corpus, features, split, cfg)
}

pub fn prepare_with_split(
    corpus: &PlaylistCorpus,
    features: &SongFeatures,
    split: SplitSpec,
    cfg: &PipelineConfig,
) -> Result<Prepared> {
    split.validate(corpus.n())?;
    let train = corpus.subset(&split.train)?;
    let features = features.align_to(corpus.song_ids())?;
    let features = if features.is_standardized() { features } else { features.standardized()? };
    let song_graph = build_song_graph(&features, cfg.knn)?;
    let playlist_graph = build_playlist_graph(&train, &cfg.playlist_graph)?;
    let c = train.to_dense();
    let omega = WeightMask::new(cfg.epsilon)?.to_dense(&train);
    Ok(Prepared { split, train, c, omega, playlist_graph, song_graph })
}

/// Which of the compared models to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    /// Graph total variation on both factors.
    Tv,
    /// Plain weighted-KL NMF.
    Nmf,
    /// Dirichlet (Tikhonov) graph smoothing.
    Gnmf,
}

impl ModelKind {
    pub fn regularizer(self) -> Regularizer {
        match self {
            Self::Tv => Regularizer::Tv,
            Self::Nmf => Regularizer::None,
            Self::Gnmf => Regularizer::Tikhonov,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Tv => "tv",
            Self::Nmf => "nmf",
            Self::Gnmf => "gnmf",
        }
    }
}

/// One Sampled query per draw, `per_category` draws for every training
/// category whose pool is large enough.
pub fn validation_queries(train: &PlaylistCorpus, per_category: usize, seed: u64) -> Result<Vec<EvalQuery>> {
    let index = CategoryIndex::new(train);
    let mut g = rng::stream(seed, rng::STREAM_VALIDATION);
    let mut out = Vec::new();
    for label in index.labels() {
        if index.pool(label)?.len() <= DEFAULT_SEEDS {
            continue;
        }
        for _ in 0..per_category {
            out.push(sampled_query(&index, label, DEFAULT_SEEDS, &mut g)?);
        }
    }
    if out.is_empty() {
        return Err(Error::argument("no category supports validation queries"));
    }
    Ok(out)
}

/// Mean MPR of the factor model `(a, b)` on `queries`.
pub fn validation_mpr(queries: &[EvalQuery], a: ArrayView2<f64>, b: ArrayView2<f64>) -> Result<f64> {
    let rec = LatentRecommender::from_factors(a.to_owned(), b.to_owned());
    let mut total = 0.0;
    for q in queries {
        let s = rec.score(&q.query)?;
        total += mpr(s.scores.as_slice().expect("contiguous"), &q.query.seeds, &q.hidden)?;
    }
    Ok(total / queries.len() as f64)
}

/// Trains one model from a shared NNDSVD start, early-stopping on
/// validation MPR when queries are given.
pub fn train_model(
    prepared: &Prepared,
    cfg: &SolverConfig,
    init: Option<&(Array2<f64>, Array2<f64>)>,
    validation: Option<&[EvalQuery]>,
) -> Result<Factorization> {
    cfg.validate()?;
    let (a0, b0) = match init {
        Some((a, b)) => (a.clone(), b.clone()),
        None => nndsvd(prepared.c.view(), cfg.rank, ZeroFill::Mean)?,
    };
    let data = prepared.training_data();
    match validation {
        Some(qs) => {
            let mut cb = |a: ArrayView2<f64>, b: ArrayView2<f64>| validation_mpr(qs, a, b);
            solve_from(&data, cfg, a0, b0, Some(&mut cb))
        }
        None => solve_from(&data, cfg, a0, b0, None),
    }
}
