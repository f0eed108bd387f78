use std::collections::HashMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{PlaylistCorpus, SplitSpec};
use crate::error::{Error, Result};
use crate::recommender::{Query, DEFAULT_K, DEFAULT_SEEDS};
use crate::rng;

/// Cap on hidden songs drawn from a category pool.
pub const POOL_HIDDEN_CAP: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    /// Seeds uniform over all songs.
    Random,
    /// Seeds from one test playlist; the rest of it is hidden.
    Test,
    /// Seeds from one category's training pool; hidden songs are drawn from
    /// the rest of that pool.
    Sampled,
}

impl QueryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Random => "random",
            Self::Test => "test",
            Self::Sampled => "sampled",
        }
    }
}

impl std::str::FromStr for QueryKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Self::Random),
            "test" => Ok(Self::Test),
            "sampled" => Ok(Self::Sampled),
            _ => Err(Error::argument(format!("unknown query kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub kind: QueryKind,
    pub count: usize,
    pub seeds_per_query: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for QuerySpec {
    fn default() -> Self {
        Self { kind: QueryKind::Sampled, count: 300, seeds_per_query: DEFAULT_SEEDS, k: DEFAULT_K, seed: 0 }
    }
}

impl QuerySpec {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 || self.seeds_per_query == 0 || self.k == 0 {
            return Err(Error::argument("query count, seeds and k must be at least 1"));
        }
        Ok(())
    }
}

/// A query with its held-out songs and the category it is judged against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalQuery {
    pub kind: QueryKind,
    pub query: Query,
    pub hidden: Vec<usize>,
    pub target: String,
}

/// Training-side view used by query generation and metrics.
#[derive(Debug, Clone)]
pub struct CategoryIndex {
    labels: Vec<String>,
    /// Sorted song pools per label.
    pools: Vec<Vec<usize>>,
    /// Training playlists per label.
    counts: Vec<usize>,
    /// Labels of the training playlists containing each song.
    song_labels: Vec<Vec<usize>>,
}

impl CategoryIndex {
    pub fn new(train: &PlaylistCorpus) -> Self {
        let labels = train.category_labels();
        let pos: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut pools = vec![Vec::new(); labels.len()];
        let mut counts = vec![0; labels.len()];
        let mut song_labels = vec![Vec::new(); train.m()];
        for (i, row) in train.rows().iter().enumerate() {
            let c = pos[train.category(i)];
            counts[c] += 1;
            for &j in row {
                song_labels[j].push(c);
            }
        }
        for (j, ls) in song_labels.iter_mut().enumerate() {
            for &c in ls.iter() {
                pools[c].push(j);
            }
            ls.sort_unstable();
            ls.dedup();
        }
        for p in &mut pools {
            p.sort_unstable();
            p.dedup();
        }
        Self { labels, pools, counts, song_labels }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn pool(&self, category: &str) -> Result<&[usize]> {
        let c = self.position(category)?;
        Ok(&self.pools[c])
    }

    pub fn position(&self, category: &str) -> Result<usize> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(category))
            .map_err(|_| Error::argument(format!("unknown category {category:?}")))
    }

    /// Share of songs (over the whole catalogue) in each category pool.
    pub fn pool_share(&self, category: &str) -> Result<f64> {
        Ok(self.pool(category)?.len() as f64 / self.song_labels.len().max(1) as f64)
    }

    /// Most frequent category among training playlists holding the seeds,
    /// ties to the globally most frequent category, then to the smaller
    /// label.
    pub fn majority_category(&self, train: &PlaylistCorpus, seeds: &[usize]) -> String {
        let mut votes = vec![0usize; self.labels.len()];
        for (i, row) in train.rows().iter().enumerate() {
            if seeds.iter().any(|s| row.binary_search(s).is_ok()) {
                votes[self.labels.binary_search(&train.categories()[i]).expect("label")] += 1;
            }
        }
        let best = (0..self.labels.len())
            .max_by(|&a, &b| votes[a].cmp(&votes[b]).then(self.counts[a].cmp(&self.counts[b])).then(b.cmp(&a)))
            .expect("at least one category");
        self.labels[best].clone()
    }
}

fn pool_hidden(pool: &[usize], seeds: &[usize], g: &mut impl Rng) -> Vec<usize> {
    let rest: Vec<usize> = pool.iter().copied().filter(|j| !seeds.contains(j)).collect();
    let mut hidden: Vec<usize> =
        if rest.len() > POOL_HIDDEN_CAP { rest.choose_multiple(g, POOL_HIDDEN_CAP).copied().collect() } else { rest };
    hidden.sort_unstable();
    hidden
}

/// Sampled-style query from a category pool, with up to
/// [`POOL_HIDDEN_CAP`] other pool songs hidden.
pub fn sampled_query(index: &CategoryIndex, category: &str, s: usize, g: &mut impl Rng) -> Result<EvalQuery> {
    let pool = index.pool(category)?;
    if pool.len() < s + 1 {
        return Err(Error::argument(format!("category {category:?} has fewer than {} songs", s + 1)));
    }
    let seeds: Vec<usize> = pool.choose_multiple(g, s).copied().collect();
    let hidden = pool_hidden(pool, &seeds, g);
    Ok(EvalQuery { kind: QueryKind::Sampled, query: Query::new(seeds), hidden, target: category.to_string() })
}

/// Draws `spec.count` queries against `corpus` split by `split`.
pub fn generate_queries(spec: &QuerySpec, corpus: &PlaylistCorpus, split: &SplitSpec) -> Result<Vec<EvalQuery>> {
    spec.validate()?;
    split.validate(corpus.n())?;
    let train = corpus.subset(&split.train)?;
    let index = CategoryIndex::new(&train);
    let s = spec.seeds_per_query;
    let m = corpus.m();
    if s >= m {
        return Err(Error::argument("more seeds per query than songs"));
    }
    let mut g = rng::stream(spec.seed, rng::STREAM_QUERIES);
    let mut out = Vec::with_capacity(spec.count);
    match spec.kind {
        QueryKind::Random => {
            for _ in 0..spec.count {
                let seeds: Vec<usize> = rand::seq::index::sample(&mut g, m, s).into_vec();
                let target = index.majority_category(&train, &seeds);
                out.push(EvalQuery { kind: spec.kind, query: Query::new(seeds), hidden: vec![], target });
            }
        }
        QueryKind::Test => {
            let eligible: Vec<usize> = split.test.iter().copied().filter(|&i| corpus.row(i).len() > s).collect();
            if eligible.is_empty() {
                return Err(Error::argument(format!("no test playlist has more than {s} songs")));
            }
            for _ in 0..spec.count {
                let i = *eligible.choose(&mut g).expect("nonempty");
                let mut row = corpus.row(i).to_vec();
                row.shuffle(&mut g);
                let seeds = row[..s].to_vec();
                let mut hidden = row[s..].to_vec();
                hidden.sort_unstable();
                out.push(EvalQuery {
                    kind: spec.kind,
                    query: Query::new(seeds),
                    hidden,
                    target: corpus.category(i).to_string(),
                });
            }
        }
        QueryKind::Sampled => {
            let usable: Vec<&String> =
                index.labels().iter().filter(|l| index.pools[index.position(l).unwrap()].len() > s).collect();
            if usable.is_empty() {
                return Err(Error::argument(format!("no category pool has more than {s} songs")));
            }
            for _ in 0..spec.count {
                let cat = (*usable.choose(&mut g).expect("nonempty")).clone();
                out.push(sampled_query(&index, &cat, s, &mut g)?);
            }
        }
    }
    for (n, q) in out.iter_mut().enumerate() {
        q.query.id = Some(format!("{}-{n}", spec.kind.as_str()));
        q.query.target = Some(q.target.clone());
    }
    Ok(out)
}
