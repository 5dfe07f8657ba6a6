use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{CorpusError, Target};

/// Instance → label assignments grouped by target word.
///
/// Used both for gold standards (labels are senses) and system output
/// (labels are clusters). The canonical file form lists targets and then
/// instance ids in sorted order, with no comments.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyFile {
    entries: BTreeMap<Target, BTreeMap<String, String>>,
}

impl KeyFile {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the previous label if `id` was already present under `target`.
    pub fn insert(&mut self, target: Target, id: String, label: String) -> Option<String> {
        self.entries.entry(target).or_default().insert(id, label)
    }

    pub fn targets(&self) -> impl Iterator<Item = &Target> {
        self.entries.keys()
    }

    pub fn labels(&self, target: &Target) -> Option<&BTreeMap<String, String>> {
        self.entries.get(target)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Target, &BTreeMap<String, String>)> {
        self.entries.iter()
    }

    /// Total number of records.
    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_canonical_string(&self) -> Result<String, CorpusError> {
        let mut out = String::new();
        for (target, labels) in &self.entries {
            for (id, label) in labels {
                for (what, field) in [("instance id", id), ("label", label)] {
                    if field.is_empty() || field.chars().any(char::is_whitespace) {
                        return Err(CorpusError::InvalidKeyRecord(format!(
                            "{what} `{field}` for {target} must be non-empty without whitespace"
                        )));
                    }
                }
                writeln!(out, "{target} {id} {label}").expect("writing to a String");
            }
        }
        Ok(out)
    }
}

pub fn load_key_file(path: &Path) -> Result<KeyFile, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_key_file(&content, path)
}

/// Parses key-file text; `path` is only used in error messages.
pub fn parse_key_file(content: &str, path: &Path) -> Result<KeyFile, CorpusError> {
    let mut key = KeyFile::new();
    let mut seen = HashSet::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| CorpusError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [target, id, label] = fields[..] else {
            return Err(parse_err(format!(
                "expected `<lemma>.<pos> <instance_id> <label>`, found {} field(s)",
                fields.len()
            )));
        };
        let target: Target = target
            .parse()
            .map_err(|e: CorpusError| parse_err(e.to_string()))?;
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateInstance {
                id: id.to_string(),
                path: path.to_path_buf(),
                line,
            });
        }
        key.insert(target, id.to_string(), label.to_string());
    }
    Ok(key)
}

pub fn write_key_file(key: &KeyFile, path: &Path) -> Result<(), CorpusError> {
    let text = key.to_canonical_string()?;
    fs::write(path, text).map_err(|e| CorpusError::io(path, e))
}
