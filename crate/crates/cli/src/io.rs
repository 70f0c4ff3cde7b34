//! JSON, JSON-lines and CSV files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::input)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text)
        .with_context(|| format!("malformed JSON in {}", path.display()))
        .map_err(CliError::input)
}

/// Parses one value per non-empty line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let text = read_text(path)?;
    parse_jsonl(&text).map_err(|e| CliError::input(e.context(format!("in {}", path.display()))))
}

pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> anyhow::Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| serde_json::from_str(l).map_err(|e| anyhow!("line {}: {e}", k + 1)))
        .collect()
}

fn create(path: &Path) -> CliResult<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(CliError::input)?;
    }
    let f = fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))
        .map_err(CliError::input)?;
    Ok(BufWriter::new(f))
}

fn write_failed(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::runtime(anyhow!(e).context(format!("cannot write {}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| write_failed(path)(e.into()))?;
    w.write_all(b"\n").map_err(write_failed(path))?;
    w.flush().map_err(write_failed(path))
}

pub fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> CliResult<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| write_failed(path)(e.into()))?;
        w.write_all(b"\n").map_err(write_failed(path))?;
    }
    w.flush().map_err(write_failed(path))
}

/// Plot data: a header row, then one numeric row per sample.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let fail = |e: csv::Error| CliError::runtime(anyhow!(e).context(format!("cannot write {}", path.display())));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(fail)?;
    }
    w.flush().map_err(write_failed(path))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Digest of a file's bytes.
pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::input)?;
    Ok(sha256_hex(&bytes))
}
