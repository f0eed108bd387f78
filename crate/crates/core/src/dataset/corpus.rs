use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse binary playlist × song incidence with per-playlist categories.
///
/// Rows hold sorted song indices; index order of playlists and songs is the
/// order in which they were read.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaylistCorpus {
    playlist_ids: Vec<String>,
    song_ids: Vec<String>,
    categories: Vec<String>,
    rows: Vec<Vec<usize>>,
}

/// One line of the playlist file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlaylistRecord {
    pub playlist_id: String,
    pub category: String,
    pub songs: Vec<String>,
}

/// Optional first line of the playlist file fixing the song universe.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SongHeader {
    songs: Vec<String>,
}

impl PlaylistCorpus {
    /// Builds a validated corpus from index rows.
    pub fn new(
        playlist_ids: Vec<String>,
        song_ids: Vec<String>,
        categories: Vec<String>,
        rows: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = playlist_ids.len();
        let m = song_ids.len();
        if categories.len() != n || rows.len() != n {
            return Err(Error::validation(format!(
                "{n} playlists but {} categories and {} rows",
                categories.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::with_capacity(n);
        for id in &playlist_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::validation(format!("duplicate playlist id {id:?}")));
            }
        }
        let mut seen = HashSet::with_capacity(m);
        for id in &song_ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::validation(format!("duplicate song id {id:?}")));
            }
        }
        let mut sorted_rows = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(Error::validation(format!("playlist {:?} has no songs", playlist_ids[i])));
            }
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::validation(format!(
                    "playlist {:?} lists song {:?} twice",
                    playlist_ids[i], song_ids[w[0]]
                )));
            }
            if let Some(&j) = row.last().filter(|&&j| j >= m) {
                return Err(Error::validation(format!(
                    "playlist {:?} references song index {j} >= {m}",
                    playlist_ids[i]
                )));
            }
            sorted_rows.push(row);
        }
        Ok(Self { playlist_ids, song_ids, categories, rows: sorted_rows })
    }

    /// Builds a corpus from playlist records. With `songs` the universe and
    /// its order are fixed and unknown ids are rejected; otherwise songs are
    /// indexed by first appearance.
    pub fn from_records(records: &[PlaylistRecord], songs: Option<&[String]>) -> Result<Self> {
        let mut song_ids: Vec<String> = songs.map(<[String]>::to_vec).unwrap_or_default();
        let mut index: HashMap<String, usize> = song_ids.iter().enumerate().map(|(j, s)| (s.clone(), j)).collect();
        if index.len() != song_ids.len() {
            return Err(Error::validation("duplicate song id in song universe"));
        }
        let fixed = songs.is_some();
        let mut rows = Vec::with_capacity(records.len());
        for rec in records {
            let mut row = Vec::with_capacity(rec.songs.len());
            for s in &rec.songs {
                let j = match index.get(s) {
                    Some(&j) => j,
                    None if fixed => {
                        return Err(Error::validation(format!(
                            "playlist {:?} references unknown song id {s:?}",
                            rec.playlist_id
                        )))
                    }
                    None => {
                        song_ids.push(s.clone());
                        index.insert(s.clone(), song_ids.len() - 1);
                        song_ids.len() - 1
                    }
                };
                row.push(j);
            }
            rows.push(row);
        }
        Self::new(
            records.iter().map(|r| r.playlist_id.clone()).collect(),
            song_ids,
            records.iter().map(|r| r.category.clone()).collect(),
            rows,
        )
    }

    /// Number of playlists.
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Number of songs.
    pub fn m(&self) -> usize {
        self.song_ids.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        self.nnz() as f64 / (self.n() * self.m()) as f64
    }

    /// Sorted song indices of playlist `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    /// All `(playlist, song)` pairs with `C_ij = 1`, row-major.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
    }

    pub fn category(&self, i: usize) -> &str {
        &self.categories[i]
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Distinct category labels, sorted.
    pub fn category_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.categories.clone();
        labels.sort();
        labels.dedup();
        labels
    }

    pub fn playlist_ids(&self) -> &[String] {
        &self.playlist_ids
    }

    pub fn song_ids(&self) -> &[String] {
        &self.song_ids
    }

    /// Map from song id to column index.
    pub fn song_index(&self) -> HashMap<&str, usize> {
        self.song_ids.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect()
    }

    /// Dense 0/1 incidence matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut c = Array2::zeros((self.n(), self.m()));
        for (i, j) in self.entries() {
            c[[i, j]] = 1.0;
        }
        c
    }

    /// Playlists at `indices` (in that order) over the full song universe.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.n()) {
            return Err(Error::argument(format!("playlist index {i} out of range")));
        }
        Self::new(
            indices.iter().map(|&i| self.playlist_ids[i].clone()).collect(),
            self.song_ids.clone(),
            indices.iter().map(|&i| self.categories[i].clone()).collect(),
            indices.iter().map(|&i| self.rows[i].clone()).collect(),
        )
    }

    /// Songs appearing in at least one playlist labelled `category`, sorted.
    pub fn category_pool(&self, category: &str) -> Vec<usize> {
        let mut pool: Vec<usize> = self
            .rows
            .iter()
            .zip(&self.categories)
            .filter(|(_, c)| c.as_str() == category)
            .flat_map(|(row, _)| row.iter().copied())
            .collect();
        pool.sort_unstable();
        pool.dedup();
        pool
    }

    pub fn records(&self) -> Vec<PlaylistRecord> {
        (0..self.n())
            .map(|i| PlaylistRecord {
                playlist_id: self.playlist_ids[i].clone(),
                category: self.categories[i].clone(),
                songs: self.rows[i].iter().map(|&j| self.song_ids[j].clone()).collect(),
            })
            .collect()
    }
}

/// Reads a JSON-lines playlist file.
///
/// An optional first line `{"songs": [...]}` fixes the song universe; any
/// later reference to an id outside it is a validation error. Blank lines are
/// skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<PlaylistCorpus> {
    let reader = BufReader::new(File::open(path)?);
    let mut header: Option<Vec<String>> = None;
    let mut records = Vec::new();
    let mut seen_ids = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if header.is_none() && records.is_empty() && trimmed.contains("\"songs\"") {
            if let Ok(h) = serde_json::from_str::<SongHeader>(trimmed) {
                header = Some(h.songs);
                continue;
            }
        }
        let rec: PlaylistRecord =
            serde_json::from_str(trimmed).map_err(|e| Error::Parse { line: lineno, message: e.to_string() })?;
        if !seen_ids.insert(rec.playlist_id.clone()) {
            return Err(Error::validation(format!("duplicate playlist id {:?} at line {lineno}", rec.playlist_id)));
        }
        records.push(rec);
    }
    PlaylistCorpus::from_records(&records, header.as_deref())
}

/// Writes the corpus as JSON lines, song universe header first.
pub fn save_corpus(corpus: &PlaylistCorpus, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &SongHeader { songs: corpus.song_ids.clone() })?;
    writeln!(w)?;
    for rec in corpus.records() {
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
