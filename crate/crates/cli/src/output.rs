use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bad flags or config. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn csv_body<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Write via a temp file in the same directory, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// What a command hands back for writing.
#[derive(Debug, Default)]
pub struct Report {
    pub artifacts: Vec<(String, String)>,
    pub stdout: Option<String>,
    pub gamma_total: Option<f64>,
    pub cutoffs: Value,
    pub completeness_deficit: Option<f64>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    pub results: Value,
}

#[derive(Debug, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub gamma_total: Option<f64>,
    pub cutoffs: Value,
    pub completeness_deficit: Option<f64>,
    pub seed: Option<u64>,
    pub rng: Option<&'static str>,
    pub jobs: usize,
    pub cache_hits: usize,
    pub wall_clock_s: f64,
    pub results: Value,
    pub artifacts: Vec<ArtifactEntry>,
    pub tool_version: &'static str,
}

/// Artifacts first, manifest last, so a manifest never names a missing file.
pub fn publish(out_dir: &Path, mut manifest: RunManifest, report: Report) -> Result<PathBuf> {
    for (name, body) in &report.artifacts {
        write_atomic(&out_dir.join(name), body.as_bytes())?;
        manifest.artifacts.push(ArtifactEntry {
            path: name.clone(),
            sha256: sha256_hex(body.as_bytes()),
            bytes: body.len(),
        });
    }
    manifest.gamma_total = report.gamma_total;
    manifest.cutoffs = report.cutoffs;
    manifest.completeness_deficit = report.completeness_deficit;
    manifest.seed = report.seed;
    manifest.rng = report.rng;
    manifest.results = report.results;
    let path = out_dir.join(format!("{}.manifest.json", manifest.command));
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_atomic(&path, json.as_bytes())?;
    Ok(path)
}

/// On-disk memo keyed by the hash of (command, params, version).
pub struct Cache {
    dir: Option<PathBuf>,
    hits: std::sync::atomic::AtomicUsize,
}

impl Cache {
    pub fn from_env(enabled: bool) -> Self {
        let dir = enabled.then(|| {
            std::env::var_os("CAT_TELECOR_CACHE").map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".cache"))
        });
        Cache { dir, hits: Default::default() }
    }

    pub fn hits(&self) -> usize {
        self.hits.load(std::sync::atomic::Ordering::Relaxed)
    }

    pub fn key<K: Serialize>(command: &str, params: &K) -> Result<String> {
        let blob = serde_json::to_vec(&(command, params, VERSION))?;
        Ok(sha256_hex(&blob))
    }

    pub fn fetch<K, T, F>(&self, command: &str, params: &K, compute: F) -> Result<T>
    where
        K: Serialize,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let Some(dir) = &self.dir else { return compute() };
        let path = dir.join(format!("{}.json", Self::key(command, params)?));
        if let Ok(bytes) = std::fs::read(&path) {
            match serde_json::from_slice(&bytes) {
                Ok(v) => {
                    self.hits.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    return Ok(v);
                }
                Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
        let v = compute()?;
        if let Err(e) = write_atomic(&path, &serde_json::to_vec(&v)?) {
            log::warn!("cache write failed: {e:#}");
        }
        Ok(v)
    }
}
