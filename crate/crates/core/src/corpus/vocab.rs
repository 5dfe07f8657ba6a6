use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{tokenize, Instance};

/// Dense word ↔ id mapping, ids `0..len()` in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    /// Builds from distinct words in id order. Returns `None` on a repeated word.
    pub fn from_words(words: Vec<String>) -> Option<Self> {
        let mut ids = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if ids.insert(w.clone(), i as u32).is_some() {
                return None;
            }
        }
        Some(Vocabulary { words, ids })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id_of(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word_of(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Keeps words occurring at least `min_count` times across `docs`.
///
/// A `min_count` of 0 is treated as 1.
pub fn build_vocabulary<S: AsRef<str>>(docs: &[Vec<S>], min_count: usize) -> Vocabulary {
    let min_count = min_count.max(1);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    let mut order: Vec<&str> = Vec::new();
    for token in docs.iter().flatten() {
        let token = token.as_ref();
        let count = counts.entry(token).or_insert(0);
        if *count == 0 {
            order.push(token);
        }
        *count += 1;
    }
    let words = order
        .into_iter()
        .filter(|w| counts[w] >= min_count)
        .map(str::to_string)
        .collect();
    Vocabulary::from_words(words).expect("words are distinct")
}

/// An instance as a sequence of vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub instance_id: String,
    pub tokens: Vec<u32>,
}

impl EncodedDocument {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Tokenizes the instance text and maps it through `vocab`, dropping
/// out-of-vocabulary tokens.
pub fn encode(instance: &Instance, vocab: &Vocabulary) -> EncodedDocument {
    encode_tokens(&instance.id, &tokenize(&instance.text), vocab)
}

pub fn encode_tokens<S: AsRef<str>>(
    instance_id: &str,
    tokens: &[S],
    vocab: &Vocabulary,
) -> EncodedDocument {
    EncodedDocument {
        instance_id: instance_id.to_string(),
        tokens: tokens
            .iter()
            .filter_map(|t| vocab.id_of(t.as_ref()))
            .collect(),
    }
}

pub fn decode(doc: &EncodedDocument, vocab: &Vocabulary) -> Vec<String> {
    doc.tokens
        .iter()
        .map(|&id| {
            vocab
                .word_of(id)
                .expect("token id within vocabulary")
                .to_string()
        })
        .collect()
}
