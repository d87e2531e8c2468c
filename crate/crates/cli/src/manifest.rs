use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use noisy_duel::solver::SolverConfig;
use noisy_duel::DuelParameters;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance of one command run: what was asked, with which settings,
/// and a digest of every file it wrote.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub parameters: Option<DuelParameters>,
    pub config: Option<SolverConfig>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(command: &str, parameters: Option<DuelParameters>, config: Option<SolverConfig>) -> Self {
        Self {
            command: command.to_string(),
            argv: std::env::args().collect(),
            parameters,
            config,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let body = fs::read(path).with_context(|| format!("reading {} back for its digest", path.display()))?;
        self.outputs.push(OutputDigest {
            path: path.display().to_string(),
            bytes: body.len() as u64,
            sha256: hex::encode(Sha256::digest(&body)),
        });
        Ok(())
    }

    /// Writes the manifest next to `primary` as `<stem>.manifest.json`.
    pub fn write_beside(mut self, primary: &Path, elapsed: Duration) -> Result<PathBuf> {
        self.wall_time_s = elapsed.as_secs_f64();
        let path = manifest_path(primary);
        let mut body = serde_json::to_string_pretty(&self)?;
        body.push('\n');
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let stem = primary.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    primary.with_file_name(format!("{stem}.manifest.json"))
}
