//! Run manifest, rewritten at the end of every command.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub finished_unix: u64,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub updated_unix: u64,
    pub seed: u64,
    pub stub_mode: bool,
    pub embed_model: String,
    pub chat_model: String,
    pub config: RunConfig,
    pub stages: BTreeMap<String, StageRecord>,
    /// Every file in the output directory other than the manifest.
    pub files: Vec<FileEntry>,
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn read_manifest(dir: &Path) -> Option<RunManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}

/// Records `stage` as having produced `files` and rewrites the manifest.
pub fn record_stage(
    config: &RunConfig,
    embed_model: &str,
    chat_model: &str,
    stage: &str,
    files: &[&str],
) -> Result<RunManifest, CliError> {
    let dir = &config.output_dir;
    let mut stages = read_manifest(dir).map(|m| m.stages).unwrap_or_default();
    stages.insert(
        stage.to_string(),
        StageRecord {
            finished_unix: now(),
            files: files.iter().map(|f| f.to_string()).collect(),
        },
    );
    let mut listing = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().to_string();
        if name == MANIFEST_FILE || !entry.file_type()?.is_file() {
            continue;
        }
        listing.push(FileEntry {
            name,
            bytes: entry.metadata()?.len(),
        });
    }
    listing.sort_by(|a, b| a.name.cmp(&b.name));
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        updated_unix: now(),
        seed: config.seed,
        stub_mode: config.stub_mode,
        embed_model: embed_model.to_string(),
        chat_model: chat_model.to_string(),
        config: config.clone(),
        stages,
        files: listing,
    };
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
