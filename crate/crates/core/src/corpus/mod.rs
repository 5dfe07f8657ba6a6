//! Instance corpora, tokenization, vocabularies and key files.
//!
//! Two corpus layouts are accepted:
//!
//! - JSONL, one object per line with exactly the keys `target`, `id`, `text`:
//!   `{"target": "promotion.n", "id": "promotion.n.3", "text": "..."}`
//! - a directory tree `<root>/<lemma>.<pos>/<instance_id>.txt`, one instance
//!   per file.
//!
//! Key files (gold standards and system output alike) hold one
//! `<lemma>.<pos> <instance_id> <label>` record per line.

mod key;
mod tokenize;
mod vocab;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use key::{load_key_file, parse_key_file, write_key_file, KeyFile};
pub use tokenize::tokenize;
pub use vocab::{build_vocabulary, decode, encode, EncodedDocument, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("duplicate instance id `{id}` ({path}:{line})")]
    DuplicateInstance {
        id: String,
        path: PathBuf,
        line: usize,
    },
    #[error("invalid target `{0}`: expected <lemma>.<n|v>")]
    InvalidTarget(String),
    #[error("cannot write key record: {0}")]
    InvalidKeyRecord(String),
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Coarse part of speech of a target word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pos {
    #[serde(rename = "n")]
    Noun,
    #[serde(rename = "v")]
    Verb,
}

impl Pos {
    pub fn tag(self) -> &'static str {
        match self {
            Pos::Noun => "n",
            Pos::Verb => "v",
        }
    }
}

/// A target word, written `<lemma>.<pos>` (e.g. `promotion.n`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Target {
    pub lemma: String,
    pub pos: Pos,
}

impl Target {
    pub fn new(lemma: impl Into<String>, pos: Pos) -> Result<Self, CorpusError> {
        let lemma = lemma.into();
        if lemma.is_empty() || lemma.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidTarget(format!("{lemma}.{}", pos.tag())));
        }
        Ok(Target { lemma, pos })
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.lemma, self.pos.tag())
    }
}

impl FromStr for Target {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (lemma, tag) = s
            .rsplit_once('.')
            .ok_or_else(|| CorpusError::InvalidTarget(s.to_string()))?;
        let pos = match tag {
            "n" => Pos::Noun,
            "v" => Pos::Verb,
            _ => return Err(CorpusError::InvalidTarget(s.to_string())),
        };
        Target::new(lemma, pos).map_err(|_| CorpusError::InvalidTarget(s.to_string()))
    }
}

impl Serialize for Target {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One occurrence context of a target word. Treated as one LDA document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub target: Target,
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Dir,
}

impl CorpusFormat {
    /// Directories are read as the per-target tree, anything else as JSONL.
    pub fn detect(path: &Path) -> Self {
        if path.is_dir() {
            CorpusFormat::Dir
        } else {
            CorpusFormat::Jsonl
        }
    }
}

/// Instances in load order, with unique ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    instances: Vec<Instance>,
}

impl Corpus {
    /// Fails on the first repeated instance id.
    pub fn new(instances: Vec<Instance>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for (i, inst) in instances.iter().enumerate() {
            if !seen.insert(inst.id.as_str()) {
                return Err(CorpusError::DuplicateInstance {
                    id: inst.id.clone(),
                    path: PathBuf::new(),
                    line: i + 1,
                });
            }
        }
        Ok(Corpus { instances })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Distinct targets in order of first appearance.
    pub fn targets(&self) -> Vec<Target> {
        let mut seen = HashSet::new();
        self.instances
            .iter()
            .filter(|inst| seen.insert(&inst.target))
            .map(|inst| inst.target.clone())
            .collect()
    }

    pub fn instances_of(&self, target: &Target) -> Vec<&Instance> {
        self.instances
            .iter()
            .filter(|inst| &inst.target == target)
            .collect()
    }

    /// Instances grouped by target; groups and members keep load order.
    pub fn grouped(&self) -> Vec<(Target, Vec<&Instance>)> {
        let mut index: HashMap<&Target, usize> = HashMap::new();
        let mut groups: Vec<(Target, Vec<&Instance>)> = Vec::new();
        for inst in &self.instances {
            let slot = *index.entry(&inst.target).or_insert_with(|| {
                groups.push((inst.target.clone(), Vec::new()));
                groups.len() - 1
            });
            groups[slot].1.push(inst);
        }
        groups
    }

    /// Drops every instance of `target`.
    pub fn without_target(&self, target: &Target) -> Corpus {
        Corpus {
            instances: self
                .instances
                .iter()
                .filter(|inst| &inst.target != target)
                .cloned()
                .collect(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRecord {
    target: String,
    id: String,
    text: String,
}

pub fn load_instances(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    match format {
        CorpusFormat::Jsonl => {
            let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
            parse_jsonl(&content, path)
        }
        CorpusFormat::Dir => load_dir(path),
    }
}

/// Parses JSONL corpus text; `path` is only used in error messages.
pub fn parse_jsonl(content: &str, path: &Path) -> Result<Corpus, CorpusError> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in content.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| CorpusError::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let record: JsonlRecord =
            serde_json::from_str(raw).map_err(|e| parse_err(e.to_string()))?;
        let target: Target = record
            .target
            .parse()
            .map_err(|e: CorpusError| parse_err(e.to_string()))?;
        if record.id.is_empty() || record.id.chars().any(char::is_whitespace) {
            return Err(parse_err(format!(
                "instance id `{}` must be non-empty and contain no whitespace",
                record.id
            )));
        }
        if !seen.insert(record.id.clone()) {
            return Err(CorpusError::DuplicateInstance {
                id: record.id,
                path: path.to_path_buf(),
                line,
            });
        }
        instances.push(Instance {
            target,
            id: record.id,
            text: record.text,
        });
    }
    Ok(Corpus { instances })
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| CorpusError::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CorpusError::io(dir, e))?;
    entries.sort();
    Ok(entries)
}

fn load_dir(root: &Path) -> Result<Corpus, CorpusError> {
    let mut instances = Vec::new();
    let mut seen = HashSet::new();
    for target_dir in sorted_entries(root)? {
        if !target_dir.is_dir() {
            continue;
        }
        let name = target_dir
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        let target: Target = name.parse().map_err(|e: CorpusError| CorpusError::Parse {
            path: target_dir.clone(),
            line: 0,
            message: e.to_string(),
        })?;
        for file in sorted_entries(&target_dir)? {
            if file.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let id = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_string();
            let text = fs::read_to_string(&file).map_err(|e| CorpusError::io(&file, e))?;
            if !seen.insert(id.clone()) {
                return Err(CorpusError::DuplicateInstance {
                    id,
                    path: file,
                    line: 0,
                });
            }
            instances.push(Instance {
                target: target.clone(),
                id,
                text,
            });
        }
    }
    Ok(Corpus { instances })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Corpus, CorpusError> {
        parse_jsonl(s, Path::new("fixture.jsonl"))
    }

    #[test]
    fn three_lines_two_targets() {
        let corpus = parse(concat!(
            r#"{"target":"promotion.n","id":"promotion.n.1","text":"a job promotion"}"#,
            "\n",
            r#"{"target":"bank.n","id":"bank.n.1","text":"river bank"}"#,
            "\n",
            r#"{"target":"promotion.n","id":"promotion.n.2","text":"a sales promotion"}"#,
            "\n",
        ))
        .unwrap();
        assert_eq!(corpus.len(), 3);
        let groups = corpus.grouped();
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].0.to_string(), "promotion.n");
        assert_eq!(
            groups[0]
                .1
                .iter()
                .map(|i| i.id.as_str())
                .collect::<Vec<_>>(),
            ["promotion.n.1", "promotion.n.2"]
        );
        assert_eq!(groups[1].1.len(), 1);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn duplicate_id_is_integrity_error() {
        let err = parse(concat!(
            r#"{"target":"bank.n","id":"x","text":"a"}"#,
            "\n",
            r#"{"target":"bank.n","id":"x","text":"b"}"#,
        ))
        .unwrap_err();
        match err {
            CorpusError::DuplicateInstance { id, line, .. } => {
                assert_eq!(id, "x");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_names_line() {
        let err = parse(concat!(
            r#"{"target":"bank.n","id":"x","text":"a"}"#,
            "\n",
            r#"{"target":"bank.n","id":"y"}"#,
        ))
        .unwrap_err();
        assert!(matches!(err, CorpusError::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().starts_with("fixture.jsonl:2:"));
    }

    #[test]
    fn unknown_key_and_bad_pos_rejected() {
        let extra = r#"{"target":"bank.n","id":"x","text":"a","lang":"en"}"#;
        assert!(matches!(
            parse(extra),
            Err(CorpusError::Parse { line: 1, .. })
        ));
        let adj = r#"{"target":"bank.a","id":"x","text":"a"}"#;
        assert!(matches!(
            parse(adj),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn target_parsing() {
        let t: Target = "get.up.v".parse().unwrap();
        assert_eq!(t.lemma, "get.up");
        assert_eq!(t.pos, Pos::Verb);
        assert!(".n".parse::<Target>().is_err());
        assert!("bank".parse::<Target>().is_err());
    }

    #[test]
    fn directory_layout() {
        let dir = tempfile::tempdir().unwrap();
        for (target, id, text) in [
            ("promotion.n", "p2", "second"),
            ("promotion.n", "p1", "first"),
            ("argue.v", "a1", "argue"),
        ] {
            let sub = dir.path().join(target);
            fs::create_dir_all(&sub).unwrap();
            fs::write(sub.join(format!("{id}.txt")), text).unwrap();
        }
        fs::write(dir.path().join("README"), "ignored").unwrap();
        let corpus = load_instances(dir.path(), CorpusFormat::detect(dir.path())).unwrap();
        let ids: Vec<_> = corpus.instances().iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["a1", "p1", "p2"]);
        assert_eq!(corpus.instances()[1].text, "first");
        assert_eq!(corpus.targets().len(), 2);
    }
}
