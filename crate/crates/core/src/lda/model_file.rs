//! Binary model files, one per target word.
//!
//! All integers and floats are little-endian. Strings are a `u32` byte length
//! followed by UTF-8 bytes.
//!
//! ```text
//! magic          8 bytes   "SFLDAMDL"
//! version        u32       1
//! label          string    target word, e.g. "promotion.n"
//! topics         u32
//! alpha          f64
//! beta           f64
//! train_iters    u32
//! infer_iters    u32
//! infer_burn_in  u32
//! seed           u64
//! vocab_size     u32
//! words          vocab_size strings, in id order
//! counts         topics * vocab_size u32, topic-major (row k holds n_kw[k][0..V])
//! ```
//!
//! Topic totals are not stored; they are recomputed on load.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use super::{LdaConfig, LdaError, TopicModel};
use crate::corpus::Vocabulary;

pub const MODEL_MAGIC: &[u8; 8] = b"SFLDAMDL";
pub const MODEL_FILE_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len() as u32);
    out.extend_from_slice(s.as_bytes());
}

fn to_u32(v: usize, what: &str) -> Result<u32, LdaError> {
    u32::try_from(v).map_err(|_| LdaError::Format(format!("{what} {v} does not fit in u32")))
}

/// Serializes `model` under `label` (the target word).
pub fn encode_model(model: &TopicModel, label: &str) -> Result<Vec<u8>, LdaError> {
    let cfg = model.config();
    let v = model.vocab().len();
    let mut out = Vec::with_capacity(64 + v * (8 + 4 * model.topics()));
    out.extend_from_slice(MODEL_MAGIC);
    put_u32(&mut out, MODEL_FILE_VERSION);
    put_str(&mut out, label);
    put_u32(&mut out, to_u32(cfg.topics, "topic count")?);
    out.extend_from_slice(&cfg.alpha.to_le_bytes());
    out.extend_from_slice(&cfg.beta.to_le_bytes());
    put_u32(&mut out, to_u32(cfg.train_iters, "train_iters")?);
    put_u32(&mut out, to_u32(cfg.infer_iters, "infer_iters")?);
    put_u32(&mut out, to_u32(cfg.infer_burn_in, "infer_burn_in")?);
    out.extend_from_slice(&cfg.seed.to_le_bytes());
    put_u32(&mut out, to_u32(v, "vocabulary size")?);
    for word in model.vocab().words() {
        put_str(&mut out, word);
    }
    for k in 0..model.topics() {
        for w in 0..v as u32 {
            put_u32(&mut out, model.count(k, w));
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], LdaError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| {
                LdaError::Format(format!(
                    "truncated while reading {what} at byte {}",
                    self.pos
                ))
            })?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self, what: &str) -> Result<u32, LdaError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, LdaError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, LdaError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String, LdaError> {
        let len = self.u32(what)? as usize;
        let raw = self.take(len, what)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| LdaError::Format(format!("{what} is not valid UTF-8")))
    }
}

/// Parses a model file image, returning the stored label and the model.
pub fn decode_model(bytes: &[u8]) -> Result<(String, TopicModel), LdaError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8, "magic")? != MODEL_MAGIC {
        return Err(LdaError::Format(
            "not a senseforge model file (bad magic)".into(),
        ));
    }
    let version = r.u32("version")?;
    if version != MODEL_FILE_VERSION {
        return Err(LdaError::Format(format!(
            "unsupported model file version {version} (expected {MODEL_FILE_VERSION})"
        )));
    }
    let label = r.string("label")?;
    let config = LdaConfig {
        topics: r.u32("topics")? as usize,
        alpha: r.f64("alpha")?,
        beta: r.f64("beta")?,
        train_iters: r.u32("train_iters")? as usize,
        infer_iters: r.u32("infer_iters")? as usize,
        infer_burn_in: r.u32("infer_burn_in")? as usize,
        seed: r.u64("seed")?,
    };
    config.validate()?;
    let v = r.u32("vocabulary size")? as usize;
    let words = (0..v)
        .map(|_| r.string("vocabulary word"))
        .collect::<Result<Vec<_>, _>>()?;
    let vocab = Vocabulary::from_words(words)
        .ok_or_else(|| LdaError::Format("vocabulary contains a repeated word".into()))?;
    let counts = (0..config.topics)
        .map(|_| {
            (0..v)
                .map(|_| r.u32("counts"))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if r.pos != bytes.len() {
        return Err(LdaError::Format(format!(
            "{} trailing bytes after counts",
            bytes.len() - r.pos
        )));
    }
    let model = TopicModel::from_counts(vocab, &counts, config)?;
    Ok((label, model))
}

pub fn write_model(model: &TopicModel, label: &str, path: &Path) -> Result<(), LdaError> {
    let bytes = encode_model(model, label)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<(String, TopicModel), LdaError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    decode_model(&bytes)
}
