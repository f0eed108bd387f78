//! Run manifests: what a command read, what it wrote, and under which
//! settings. Written to `<dir>/manifests/<command>.json` next to the primary
//! output. No timestamps, so reruns are byte-identical.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::settings::Settings;

pub const MANIFEST_DIR: &str = "manifests";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    /// File name only; directories vary between runs.
    pub name: String,
    pub sha256: String,
    /// Config hash of the run that produced this input, when its manifest
    /// sits alongside it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upstream_config_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub settings: Settings,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex(&h.finalize()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of the hyperparameters in canonical JSON.
pub fn settings_hash(settings: &Settings) -> String {
    let json = serde_json::to_vec(&settings.hyperparameters()).expect("settings serialize");
    hex(&Sha256::digest(json))
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn manifests_in(dir: &Path) -> Vec<Manifest> {
    let Ok(entries) = fs::read_dir(dir.join(MANIFEST_DIR)) else { return Vec::new() };
    let mut paths: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).collect();
    paths.sort();
    paths.iter().filter_map(|p| fs::read(p).ok()).filter_map(|b| serde_json::from_slice(&b).ok()).collect()
}

/// Hashes `path` and looks for the manifest of the run that wrote it.
pub fn input_record(path: &Path) -> Result<FileRecord, CliError> {
    let sha256 = sha256_file(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let upstream =
        manifests_in(dir).into_iter().find(|m| m.outputs.iter().any(|o| o.sha256 == sha256)).map(|m| m.config_hash);
    Ok(FileRecord { name: file_name(path), sha256, upstream_config_hash: upstream })
}

pub fn output_record(path: &Path) -> Result<FileRecord, CliError> {
    Ok(FileRecord { name: file_name(path), sha256: sha256_file(path)?, upstream_config_hash: None })
}

pub struct ManifestBuilder {
    command: String,
    settings: Settings,
    inputs: Vec<FileRecord>,
    outputs: Vec<PathBuf>,
}

impl ManifestBuilder {
    pub fn new(command: &str, settings: &Settings) -> Self {
        Self { command: command.into(), settings: settings.hyperparameters(), inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.inputs.push(input_record(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn config_hash(&self) -> String {
        settings_hash(&self.settings)
    }

    /// Upstream hashes of the inputs, in input order.
    pub fn upstream(&self) -> serde_json::Value {
        self.inputs
            .iter()
            .map(|r| (r.name.clone(), serde_json::json!(r.upstream_config_hash)))
            .collect::<serde_json::Map<_, _>>()
            .into()
    }

    /// Hashes the outputs and writes the manifest beside the first one.
    pub fn write(&self) -> Result<PathBuf, CliError> {
        let first = self.outputs.first().ok_or_else(|| CliError::data("manifest without outputs"))?;
        let outputs = self.outputs.iter().map(|p| output_record(p)).collect::<Result<Vec<_>, _>>()?;
        let manifest = Manifest {
            command: self.command.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: self.config_hash(),
            seed: self.settings.root_seed(),
            settings: self.settings.clone(),
            inputs: self.inputs.clone(),
            outputs,
        };
        let dir = first.parent().unwrap_or(Path::new(".")).join(MANIFEST_DIR);
        fs::create_dir_all(&dir)?;
        let path = dir.join(format!("{}.json", self.command));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn upstream_hash_follows_content() {
        let dir = tempfile::tempdir().unwrap();
        let data = dir.path().join("a.txt");
        fs::write(&data, "hello").unwrap();
        let s = Settings { rank: Some(4), ..Default::default() };
        let mut b = ManifestBuilder::new("make", &s);
        b.output(&data);
        b.write().unwrap();
        let rec = input_record(&data).unwrap();
        assert_eq!(rec.upstream_config_hash, Some(settings_hash(&s)));
        fs::write(&data, "changed").unwrap();
        assert_eq!(input_record(&data).unwrap().upstream_config_hash, None);
    }
}
