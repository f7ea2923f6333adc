use std::io::{BufRead, BufReader};
use std::path::Path;

use newsclass::store::{fnv1a64, write_atomic};
use newsclass::ProcessedDoc;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::error::{CliError, CliResult};

/// One line of the aggregated summary table.
#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub metric: String,
    pub value: f64,
}

impl SummaryRow {
    pub fn new(run: impl Into<String>, metric: &str, value: f64) -> Self {
        SummaryRow { run: run.into(), metric: metric.to_string(), value }
    }
}

/// Envelope shared by every JSON report.
#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    pub config: &'a PipelineConfig,
    pub summary: Vec<SummaryRow>,
    pub result: T,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::data(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    Ok(write_atomic(path, &bytes)?)
}

pub fn write_report<T: Serialize>(cfg: &PipelineConfig, name: &str, command: &str, summary: Vec<SummaryRow>, result: T) -> CliResult<()> {
    write_json(&cfg.out(name), &Report { command, seed: cfg.seed, config: cfg, summary, result })
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    Ok(write_atomic(path, text.as_bytes())?)
}

pub fn write_docs(path: &Path, docs: &[ProcessedDoc]) -> CliResult<()> {
    let mut bytes = Vec::new();
    for d in docs {
        serde_json::to_writer(&mut bytes, d).map_err(|e| CliError::data(e.to_string()))?;
        bytes.push(b'\n');
    }
    Ok(write_atomic(path, &bytes)?)
}

pub fn read_docs(path: &Path) -> CliResult<Vec<ProcessedDoc>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("cannot open {} ({e}); run the earlier pipeline stage first", path.display())))?;
    let mut docs = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc = serde_json::from_str(&line).map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        docs.push(doc);
    }
    Ok(docs)
}

pub fn require(path: &Path, stage: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::data(format!("{} not found; run `{stage}` first", path.display())))
    }
}

/// Stable pseudo-random position in [0, 1) of a document id under `seed`.
/// Used for held-out partitions that must agree across subcommands.
pub fn hash_unit(seed: u64, id: &str) -> f64 {
    // FNV alone leaves the high bits nearly constant for ids that differ
    // only in their last characters; the splitmix64 finalizer spreads them.
    let mut h = fnv1a64(format!("{seed}\u{0}{id}").as_bytes());
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// Sorted distinct labels, unless the config fixes the class order.
pub fn class_names<'a>(cfg: &PipelineConfig, docs: impl IntoIterator<Item = &'a ProcessedDoc>) -> Vec<String> {
    if let Some(c) = &cfg.corpus.classes {
        return c.clone();
    }
    let set: std::collections::BTreeSet<&str> = docs.into_iter().filter_map(|d| d.label.as_deref()).collect();
    set.into_iter().map(str::to_string).collect()
}
