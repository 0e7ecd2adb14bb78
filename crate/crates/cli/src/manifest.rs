use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::Context;
use chrono::{DateTime, Utc};
use pctadw::dataset::{DOCS_FILE, EDGES_FILE, LABELS_FILE};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Provenance written next to the artifacts of every command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    pub seed: u64,
    pub dataset_dir: Option<PathBuf>,
    /// SHA-256 of each input file, keyed by file name.
    pub input_hashes: BTreeMap<String, String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    pub git_describe: Option<String>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn begin(command: &str, config: serde_json::Value, seed: u64) -> Self {
        let now = Utc::now();
        Self {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            config,
            seed,
            dataset_dir: None,
            input_hashes: BTreeMap::new(),
            started_at: now,
            finished_at: now,
            git_describe: git_describe(),
            outputs: Vec::new(),
        }
    }

    pub fn with_dataset(mut self, dir: &Path) -> anyhow::Result<Self> {
        self.dataset_dir = Some(dir.to_owned());
        for file in [EDGES_FILE, DOCS_FILE, LABELS_FILE] {
            self.input_hashes.insert(file.to_owned(), sha256_file(&dir.join(file))?);
        }
        Ok(self)
    }

    pub fn with_input(mut self, key: &str, path: &Path) -> anyhow::Result<Self> {
        self.input_hashes.insert(key.to_owned(), sha256_file(path)?);
        Ok(self)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn finish(mut self, out_dir: &Path, outputs: &[&str]) -> anyhow::Result<()> {
        self.finished_at = Utc::now();
        self.outputs = outputs.iter().map(|s| s.to_string()).collect();
        let path = out_dir.join(format!("{}.manifest.json", self.command));
        fs::write(&path, serde_json::to_string_pretty(&self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn git_describe() -> Option<String> {
    let out = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()?;
    if !out.status.success() {
        return None;
    }
    let text = String::from_utf8(out.stdout).ok()?.trim().to_owned();
    (!text.is_empty()).then_some(text)
}
