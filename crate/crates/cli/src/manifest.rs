use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use vesd::Error;

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Hash of the canonical JSON form: object keys sorted, no whitespace.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String, Error> {
    // serde_json maps are ordered by key, so re-serialising a Value sorts them.
    let value = serde_json::to_value(config)?;
    Ok(sha256_hex(serde_json::to_string(&value)?.as_bytes()))
}

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
pub struct Failure {
    pub class: String,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub vesd: &'static str,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub artifacts: Vec<Artifact>,
    pub versions: Versions,
    pub wall_time_s: f64,
    pub exit_code: i32,
    pub error: Option<Failure>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            config_hash: None,
            seed: None,
            jobs: None,
            artifacts: Vec::new(),
            versions: Versions {
                vesd: env!("CARGO_PKG_VERSION"),
            },
            wall_time_s: 0.0,
            exit_code: 0,
            error: None,
        }
    }

    pub fn fail(&mut self, err: &Error) {
        self.exit_code = err.class().exit_code();
        self.error = Some(Failure {
            class: err.class().to_string(),
            message: err.to_string(),
        });
    }
}

/// Files held in memory until a run has fully succeeded.
#[derive(Default)]
pub struct Staged {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Staged {
    pub fn add(&mut self, rel: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((rel.into(), bytes));
    }

    pub fn commit(self, out: &Path, manifest: &mut RunManifest) -> Result<(), Error> {
        for (rel, bytes) in self.files {
            let path = out.join(&rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(&path, &bytes)?;
            manifest.artifacts.push(Artifact {
                path: rel,
                sha256: sha256_hex(&bytes),
                bytes: bytes.len(),
            });
        }
        Ok(())
    }
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> std::io::Result<()> {
    fs::create_dir_all(out)?;
    let text = serde_json::to_string_pretty(manifest).map_err(std::io::Error::other)?;
    fs::write(out.join("manifest.json"), text + "\n")
}
