use std::collections::HashMap;
use std::path::Path;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

/// Per-song numeric feature rows, optionally with a genre label.
#[derive(Debug, Clone, PartialEq)]
pub struct SongFeatures {
    pub song_ids: Vec<String>,
    pub names: Vec<String>,
    /// m × d feature matrix.
    pub matrix: Array2<f64>,
    pub genres: Option<Vec<String>>,
    /// Column means and sample standard deviations removed by
    /// [`SongFeatures::standardized`]; empty for raw features.
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Constant columns removed during standardization.
    pub dropped: Vec<String>,
}

impl SongFeatures {
    pub fn new(
        song_ids: Vec<String>,
        names: Vec<String>,
        matrix: Array2<f64>,
        genres: Option<Vec<String>>,
    ) -> Result<Self> {
        if matrix.nrows() != song_ids.len() || matrix.ncols() != names.len() {
            return Err(Error::validation(format!(
                "feature matrix is {}x{} for {} songs and {} features",
                matrix.nrows(),
                matrix.ncols(),
                song_ids.len(),
                names.len()
            )));
        }
        if let Some(g) = &genres {
            if g.len() != song_ids.len() {
                return Err(Error::validation("genre column length mismatch"));
            }
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("feature matrix has non-finite values"));
        }
        Ok(Self { song_ids, names, matrix, genres, means: Vec::new(), stds: Vec::new(), dropped: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.song_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.song_ids.is_empty()
    }

    pub fn is_standardized(&self) -> bool {
        !self.means.is_empty() || !self.dropped.is_empty()
    }

    /// Z-scores every column (sample standard deviation); constant columns
    /// are dropped and listed in `dropped`.
    pub fn standardized(&self) -> Result<Self> {
        let m = self.len();
        if m < 2 {
            return Err(Error::argument("standardization needs at least two songs"));
        }
        let mut keep = Vec::new();
        let mut means = Vec::new();
        let mut stds = Vec::new();
        let mut dropped = self.dropped.clone();
        for (c, col) in self.matrix.axis_iter(Axis(1)).enumerate() {
            let mean = col.sum() / m as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            let std = var.sqrt();
            if std <= 1e-12 * (1.0 + mean.abs()) {
                dropped.push(self.names[c].clone());
            } else {
                keep.push(c);
                means.push(mean);
                stds.push(std);
            }
        }
        if keep.is_empty() {
            return Err(Error::validation("every feature column is constant"));
        }
        let mut matrix = Array2::zeros((m, keep.len()));
        for (k, &c) in keep.iter().enumerate() {
            let col = self.matrix.column(c);
            let mut out = matrix.column_mut(k);
            for (o, v) in out.iter_mut().zip(col) {
                *o = (v - means[k]) / stds[k];
            }
        }
        Ok(Self {
            song_ids: self.song_ids.clone(),
            names: keep.iter().map(|&c| self.names[c].clone()).collect(),
            matrix,
            genres: self.genres.clone(),
            means,
            stds,
            dropped,
        })
    }

    /// Reorders rows to follow `song_ids`; every id must be present.
    pub fn align_to(&self, song_ids: &[String]) -> Result<Self> {
        let index: HashMap<&str, usize> = self.song_ids.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();
        let mut order = Vec::with_capacity(song_ids.len());
        for s in song_ids {
            match index.get(s.as_str()) {
                Some(&j) => order.push(j),
                None => return Err(Error::validation(format!("no features for song id {s:?}"))),
            }
        }
        Ok(Self {
            song_ids: song_ids.to_vec(),
            names: self.names.clone(),
            matrix: self.matrix.select(Axis(0), &order),
            genres: self.genres.as_ref().map(|g| order.iter().map(|&j| g[j].clone()).collect()),
            means: self.means.clone(),
            stds: self.stds.clone(),
            dropped: self.dropped.clone(),
        })
    }
}

/// Reads `song_id,<features...>[,genre]` CSV. Missing values are rejected
/// unless `impute_mean` is set, in which case they take the column mean.
pub fn load_features(path: impl AsRef<Path>, impute_mean: bool) -> Result<SongFeatures> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.get(0) != Some("song_id") {
        return Err(Error::Parse { line: 1, message: "first column must be song_id".into() });
    }
    let has_genre = headers.iter().next_back() == Some("genre");
    let n_feat = headers.len() - 1 - usize::from(has_genre);
    if n_feat == 0 {
        return Err(Error::Parse { line: 1, message: "no feature columns".into() });
    }
    let names: Vec<String> = headers.iter().skip(1).take(n_feat).map(String::from).collect();

    let mut ids = Vec::new();
    let mut genres = Vec::new();
    let mut values: Vec<Option<f64>> = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        ids.push(rec[0].to_string());
        for field in rec.iter().skip(1).take(n_feat) {
            if field.is_empty() || field.eq_ignore_ascii_case("nan") {
                if !impute_mean {
                    return Err(Error::validation(format!("missing feature value at line {line}")));
                }
                values.push(None);
            } else {
                let v: f64 =
                    field.parse().map_err(|_| Error::Parse { line, message: format!("not a number: {field:?}") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line, message: format!("non-finite value {field:?}") });
                }
                values.push(Some(v));
            }
        }
        if has_genre {
            genres.push(rec[headers.len() - 1].to_string());
        }
    }
    let m = ids.len();
    let mut matrix = Array2::zeros((m, n_feat));
    for c in 0..n_feat {
        let present: Vec<f64> = (0..m).filter_map(|r| values[r * n_feat + c]).collect();
        if present.is_empty() && m > 0 {
            return Err(Error::validation(format!("column {:?} has no values", names[c])));
        }
        let mean = present.iter().sum::<f64>() / present.len().max(1) as f64;
        for r in 0..m {
            matrix[[r, c]] = values[r * n_feat + c].unwrap_or(mean);
        }
    }
    SongFeatures::new(ids, names, matrix, has_genre.then_some(genres))
}

/// Writes raw feature rows in the format read by [`load_features`].
pub fn save_features(features: &SongFeatures, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["song_id".to_string()];
    header.extend(features.names.iter().cloned());
    if features.genres.is_some() {
        header.push("genre".into());
    }
    w.write_record(&header)?;
    for (r, id) in features.song_ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(features.matrix.row(r).iter().map(|v| format!("{v:?}")));
        if let Some(g) = &features.genres {
            rec.push(g[r].clone());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
