use std::collections::BTreeSet;
use std::ops::RangeInclusive;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{PlaylistCorpus, SongFeatures};
use crate::error::{Error, Result};
use crate::rng;

/// Parameters of the planted-category corpus generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_playlists: usize,
    pub n_songs: usize,
    pub n_categories: usize,
    pub min_songs: usize,
    pub max_songs: usize,
    /// Probability that a playlist song is drawn outside its category pool.
    pub noise: f64,
    pub n_features: usize,
    /// Scale of the per-category feature cluster centers (jitter has unit
    /// variance).
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_playlists: 200,
            n_songs: 500,
            n_categories: 5,
            min_songs: 5,
            max_songs: 20,
            noise: 0.1,
            n_features: 8,
            separation: 3.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn songs_per_playlist(&self) -> RangeInclusive<usize> {
        self.min_songs..=self.max_songs
    }

    /// Song indices of category `c`'s pool; pools are disjoint contiguous
    /// blocks covering every song.
    pub fn pool(&self, c: usize) -> std::ops::Range<usize> {
        let lo = c * self.n_songs / self.n_categories;
        let hi = (c + 1) * self.n_songs / self.n_categories;
        lo..hi
    }

    pub fn category_label(c: usize) -> String {
        format!("cat{c}")
    }
}

/// Generates a corpus where each playlist draws its songs from its
/// category's pool, except that each song independently comes from outside
/// the pool with probability `noise`. Song features sit at per-category
/// cluster centers plus unit Gaussian jitter.
pub fn synthesize_corpus(cfg: &SynthConfig) -> Result<(PlaylistCorpus, SongFeatures)> {
    let k = cfg.n_categories;
    if k == 0 || k > cfg.n_playlists {
        return Err(Error::argument(format!("need 1 <= categories <= playlists, got {k} and {}", cfg.n_playlists)));
    }
    if cfg.min_songs == 0 || cfg.min_songs > cfg.max_songs {
        return Err(Error::argument("invalid songs-per-playlist range"));
    }
    if !(0.0..=1.0).contains(&cfg.noise) {
        return Err(Error::argument(format!("noise {} outside [0, 1]", cfg.noise)));
    }
    if cfg.n_features == 0 {
        return Err(Error::argument("need at least one feature"));
    }
    let min_pool = cfg.n_songs / k;
    let min_outside = cfg.n_songs - cfg.n_songs.div_ceil(k);
    if min_pool < cfg.max_songs || (cfg.noise > 0.0 && min_outside < cfg.max_songs) {
        return Err(Error::argument(format!(
            "{} songs over {k} categories cannot fill playlists of {} songs",
            cfg.n_songs, cfg.max_songs
        )));
    }

    let mut rng = rng::stream(cfg.seed, rng::STREAM_SYNTH);

    let mut cats: Vec<usize> = (0..cfg.n_playlists).map(|i| i % k).collect();
    cats.shuffle(&mut rng);

    let mut rows = Vec::with_capacity(cfg.n_playlists);
    for &c in &cats {
        let pool = cfg.pool(c);
        let len = rng.random_range(cfg.songs_per_playlist());
        let mut songs = BTreeSet::new();
        while songs.len() < len {
            let j = if rng.random::<f64>() < cfg.noise {
                let outside = cfg.n_songs - pool.len();
                let r = rng.random_range(0..outside);
                if r < pool.start {
                    r
                } else {
                    r + pool.len()
                }
            } else {
                rng.random_range(pool.clone())
            };
            songs.insert(j);
        }
        rows.push(songs.into_iter().collect::<Vec<_>>());
    }

    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..cfg.n_features).map(|_| cfg.separation * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut matrix = Array2::zeros((cfg.n_songs, cfg.n_features));
    let mut genres = Vec::with_capacity(cfg.n_songs);
    for (c, center) in centers.iter().enumerate() {
        for j in cfg.pool(c) {
            for (f, &mu) in center.iter().enumerate() {
                matrix[[j, f]] = mu + rng.sample::<f64, _>(StandardNormal);
            }
            genres.push(SynthConfig::category_label(c));
        }
    }

    let song_ids: Vec<String> = (0..cfg.n_songs).map(|j| format!("s{j:05}")).collect();
    let corpus = PlaylistCorpus::new(
        (0..cfg.n_playlists).map(|i| format!("p{i:05}")).collect(),
        song_ids.clone(),
        cats.iter().map(|&c| SynthConfig::category_label(c)).collect(),
        rows,
    )?;
    let features =
        SongFeatures::new(song_ids, (0..cfg.n_features).map(|f| format!("f{f}")).collect(), matrix, Some(genres))?;
    Ok((corpus, features))
}
