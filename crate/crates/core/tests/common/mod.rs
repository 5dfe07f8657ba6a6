//! Synthetic corpora with known generating structure.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use senseforge::corpus::{EncodedDocument, Vocabulary};

/// Alphabetic name for `n` (tokenizer-safe: no digits).
pub fn letters(mut n: usize) -> String {
    let mut s = String::new();
    loop {
        s.insert(0, (b'a' + (n % 26) as u8) as char);
        n /= 26;
        if n == 0 {
            break;
        }
        n -= 1;
    }
    s
}

/// Two topics over disjoint 10-word vocabularies: ids 0..10 belong to topic
/// 0, ids 10..20 to topic 1. Each document mixes the topics with a weight
/// drawn uniformly from [0, 1].
pub fn two_topic_corpus(seed: u64, docs: usize, len: usize) -> (Vec<EncodedDocument>, Vocabulary) {
    let vocab =
        Vocabulary::from_words((0..20).map(|i| format!("w{}", letters(i))).collect()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let docs = (0..docs)
        .map(|d| {
            let p: f64 = rng.random();
            let tokens = (0..len)
                .map(|_| {
                    let topic = if rng.random::<f64>() < p { 0 } else { 1 };
                    topic * 10 + rng.random_range(0..10u32)
                })
                .collect();
            EncodedDocument {
                instance_id: format!("d{d}"),
                tokens,
            }
        })
        .collect();
    (docs, vocab)
}

/// Random documents over a vocabulary of `vocab` words, lengths 0..max_len.
pub fn fuzz_corpus(seed: u64, docs: usize, vocab: usize, max_len: usize) -> Vec<EncodedDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..docs)
        .map(|d| {
            let len = rng.random_range(0..max_len);
            EncodedDocument {
                instance_id: format!("f{d}"),
                tokens: (0..len)
                    .map(|_| rng.random_range(0..vocab as u32))
                    .collect(),
            }
        })
        .collect()
}

pub struct SenseCorpus {
    /// JSONL corpus text.
    pub jsonl: String,
    /// Gold key text.
    pub key: String,
    /// instance id → generating sense index.
    pub senses: BTreeMap<String, usize>,
}

/// Instances of `target` for `senses` senses, each sense with its own
/// disjoint 15-word topical vocabulary. Every instance has 25 sense words,
/// 5 words from a shared background pool and the target lemma itself.
pub fn sense_corpus(seed: u64, target: &str, senses: usize, per_sense: usize) -> SenseCorpus {
    sense_corpus_sized(seed, target, &vec![per_sense; senses])
}

/// As [`sense_corpus`] with `sizes[s]` instances of sense `s`.
pub fn sense_corpus_sized(seed: u64, target: &str, sizes: &[usize]) -> SenseCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lemma = target.rsplit_once('.').unwrap().0;
    let background: Vec<String> = (0..20).map(|i| format!("bg{}", letters(i))).collect();
    let vocab: Vec<Vec<String>> = (0..sizes.len())
        .map(|s| {
            (0..15)
                .map(|j| format!("{}x{}", letters(s), letters(j)))
                .collect()
        })
        .collect();
    let mut out = SenseCorpus {
        jsonl: String::new(),
        key: String::new(),
        senses: BTreeMap::new(),
    };
    // Interleave senses so file order carries no sense information.
    let mut remaining = sizes.to_vec();
    let mut i = 0;
    while remaining.iter().any(|&r| r > 0) {
        for (s, words) in vocab.iter().enumerate() {
            if remaining[s] == 0 {
                continue;
            }
            remaining[s] -= 1;
            let mut tokens: Vec<&str> = Vec::with_capacity(31);
            tokens.extend((0..25).map(|_| words[rng.random_range(0..words.len())].as_str()));
            tokens
                .extend((0..5).map(|_| background[rng.random_range(0..background.len())].as_str()));
            let at = rng.random_range(0..=tokens.len());
            tokens.insert(at, lemma);
            let id = format!("{target}.{i}");
            let text = tokens.join(" ");
            writeln!(
                out.jsonl,
                r#"{{"target":"{target}","id":"{id}","text":"{text}"}}"#
            )
            .unwrap();
            writeln!(out.key, "{target} {id} {target}.sense{s}").unwrap();
            out.senses.insert(id, s);
            i += 1;
        }
    }
    out
}

pub fn write(path: &Path, content: &str) {
    std::fs::write(path, content).unwrap();
}

/// Fraction of instances whose cluster's majority sense equals their own.
pub fn purity(clusters: &BTreeMap<String, usize>, senses: &BTreeMap<String, usize>) -> f64 {
    let mut counts: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (id, &c) in clusters {
        *counts.entry(c).or_default().entry(senses[id]).or_default() += 1;
    }
    let majority: usize = counts.values().map(|m| *m.values().max().unwrap()).sum();
    majority as f64 / clusters.len() as f64
}

/// For each generating topic of the two-topic corpus, the model topic holding
/// most of that topic's words; returns how many of the 20 words sit in the
/// model topic matched to their generating topic (best label permutation).
pub fn recovered_words(phi: &[Vec<f64>]) -> usize {
    let argmax = |w: usize| {
        (0..phi.len())
            .max_by(|&a, &b| phi[a][w].partial_cmp(&phi[b][w]).unwrap())
            .unwrap()
    };
    let assigned: Vec<usize> = (0..20).map(argmax).collect();
    let score = |perm: [usize; 2]| (0..20).filter(|&w| assigned[w] == perm[w / 10]).count();
    score([0, 1]).max(score([1, 0]))
}
