//! θ files: JSONL, one `{"id": ..., "target": ..., "theta": [...]}` per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::{CorpusError, Target};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaRecord {
    pub id: String,
    /// Optional on read; when absent the target is taken from the id prefix
    /// (`promotion.n.3` → `promotion.n`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
    pub theta: Vec<f64>,
}

impl ThetaRecord {
    pub fn resolved_target(&self) -> Option<Target> {
        self.target.clone().or_else(|| {
            let (prefix, _) = self.id.rsplit_once('.')?;
            prefix.parse().ok()
        })
    }
}

pub fn write_thetas(records: &[ThetaRecord], path: &Path) -> Result<(), PipelineError> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("θ record serializes"));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| PipelineError::io(path, e))
}

pub fn read_thetas(path: &Path) -> Result<Vec<ThetaRecord>, PipelineError> {
    let content = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_thetas(&content, path)
}

pub fn parse_thetas(content: &str, path: &Path) -> Result<Vec<ThetaRecord>, PipelineError> {
    let mut records = Vec::new();
    for (idx, raw) in content.lines().enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| {
            PipelineError::Corpus(CorpusError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message,
            })
        };
        let record: ThetaRecord =
            serde_json::from_str(raw).map_err(|e| parse_err(e.to_string()))?;
        if record.resolved_target().is_none() {
            return Err(parse_err(format!(
                "no target for `{}` (add a \"target\" key)",
                record.id
            )));
        }
        records.push(record);
    }
    Ok(records)
}
