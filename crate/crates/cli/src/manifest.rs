//! Append-only run manifests.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::{parse_jsonl, read_text, sha256_hex};

pub const MANIFEST_FILE: &str = "manifest.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub config_digest: String,
    /// SHA-256 of every input file, keyed by role.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
    #[serde(default)]
    pub seeds: Vec<u64>,
    pub artifacts: Vec<String>,
    pub tool_version: String,
    /// Seconds since the Unix epoch when the command started.
    pub started_at: u64,
    pub wall_clock_s: f64,
    pub pass: bool,
    #[serde(default)]
    pub summary: serde_json::Value,
}

/// Canonical form: serialized through `serde_json::Value`, whose maps are
/// ordered by key, so field order in the source file does not matter.
pub fn canonical_json<T: Serialize>(value: &T) -> CliResult<String> {
    let v = serde_json::to_value(value).map_err(CliError::input)?;
    serde_json::to_string(&v).map_err(CliError::input)
}

pub fn config_digest<T: Serialize>(value: &T) -> CliResult<String> {
    Ok(sha256_hex(canonical_json(value)?.as_bytes()))
}

pub fn append(path: &Path, manifest: &RunManifest) -> CliResult<()> {
    let fail = |e: std::io::Error| CliError::runtime(anyhow!(e).context(format!("cannot append to {}", path.display())));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(fail)?;
    }
    let mut line = serde_json::to_string(manifest).map_err(CliError::runtime)?;
    line.push('\n');
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(fail)?;
    f.write_all(line.as_bytes()).map_err(fail)
}

pub fn read_all(path: &Path) -> CliResult<Vec<RunManifest>> {
    let text = read_text(path)?;
    parse_jsonl(&text)
        .with_context(|| format!("in {}", path.display()))
        .map_err(CliError::input)
}
