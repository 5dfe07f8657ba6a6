//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! A [`TopicModel`] holds only the topic–word counts of a finished sampler;
//! the topic–word distribution is `(n_kw + beta) / (n_k + V * beta)`.
//! Held-out documents are folded in by [`infer_theta`], which resamples only
//! the document's own assignments against the frozen model counts.

mod gibbs;
mod infer;
mod model_file;

use serde::{Deserialize, Serialize};

use crate::corpus::{EncodedDocument, Vocabulary};

pub use gibbs::{conditional_weights, GibbsSampler};
pub use infer::infer_theta;
pub use model_file::{read_model, write_model, MODEL_FILE_VERSION, MODEL_MAGIC};

#[derive(Debug, thiserror::Error)]
pub enum LdaError {
    #[error("invalid LDA configuration: {0}")]
    Config(String),
    #[error("no tokens to train on (all {0} documents are empty)")]
    NoTokens(usize),
    #[error("document `{doc}` has token id {id} outside a vocabulary of {vocab}")]
    TokenOutOfRange { doc: String, id: u32, vocab: usize },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    /// Number of topics K.
    pub topics: usize,
    /// Symmetric document–topic prior.
    pub alpha: f64,
    /// Symmetric topic–word prior.
    pub beta: f64,
    pub train_iters: usize,
    pub infer_iters: usize,
    /// Inference sweeps discarded before θ samples are averaged.
    pub infer_burn_in: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults for `topics` topics: alpha = 50/K, beta = 0.01, 1000 training
    /// sweeps, 100 inference sweeps of which 50 are burn-in.
    pub fn with_topics(topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            train_iters: 1000,
            infer_iters: 100,
            infer_burn_in: 50,
            seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), LdaError> {
        let fail = |msg: String| Err(LdaError::Config(msg));
        if self.topics == 0 {
            return fail("topic count must be at least 1".into());
        }
        if self.topics > u32::MAX as usize {
            return fail(format!("topic count {} too large", self.topics));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return fail(format!("beta must be positive, got {}", self.beta));
        }
        if self.train_iters == 0 {
            return fail("train_iters must be at least 1".into());
        }
        if self.infer_burn_in >= self.infer_iters {
            return fail(format!(
                "infer_burn_in ({}) must be below infer_iters ({})",
                self.infer_burn_in, self.infer_iters
            ));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(400)
    }
}

/// A trained topic model: vocabulary plus topic–word counts.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    vocab: Vocabulary,
    topics: usize,
    /// Word-major counts, `word_topic[w * topics + k] = n_kw[k][w]`.
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    config: LdaConfig,
}

impl TopicModel {
    /// Builds a model from topic-major counts (`counts[k][w]`).
    pub fn from_counts(
        vocab: Vocabulary,
        counts: &[Vec<u32>],
        config: LdaConfig,
    ) -> Result<Self, LdaError> {
        config.validate()?;
        let topics = config.topics;
        let v = vocab.len();
        if counts.len() != topics || counts.iter().any(|row| row.len() != v) {
            return Err(LdaError::Config(format!(
                "count matrix must be {topics}x{v}"
            )));
        }
        let mut word_topic = vec![0u32; v * topics];
        for (k, row) in counts.iter().enumerate() {
            for (w, &c) in row.iter().enumerate() {
                word_topic[w * topics + k] = c;
            }
        }
        Ok(Self::from_word_major(vocab, word_topic, config))
    }

    fn from_word_major(vocab: Vocabulary, word_topic: Vec<u32>, config: LdaConfig) -> Self {
        let topics = config.topics;
        let mut topic_totals = vec![0u64; topics];
        for row in word_topic.chunks_exact(topics) {
            for (total, &c) in topic_totals.iter_mut().zip(row) {
                *total += u64::from(c);
            }
        }
        TopicModel {
            vocab,
            topics,
            word_topic,
            topic_totals,
            config,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn config(&self) -> &LdaConfig {
        &self.config
    }

    /// n_kw: tokens of word `word` assigned to `topic`.
    pub fn count(&self, topic: usize, word: u32) -> u32 {
        self.word_topic[word as usize * self.topics + topic]
    }

    /// Counts of `word` across all topics.
    pub fn word_row(&self, word: u32) -> &[u32] {
        let start = word as usize * self.topics;
        &self.word_topic[start..start + self.topics]
    }

    /// n_k for every topic.
    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    pub fn total_tokens(&self) -> u64 {
        self.topic_totals.iter().sum()
    }

    /// Topic-major copy of the counts, `counts[k][w]`.
    pub fn topic_word_counts(&self) -> Vec<Vec<u32>> {
        (0..self.topics)
            .map(|k| {
                (0..self.vocab.len() as u32)
                    .map(|w| self.count(k, w))
                    .collect()
            })
            .collect()
    }

    /// Checks `n_k = Σ_w n_kw` for every topic.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut totals = vec![0u64; self.topics];
        for row in self.word_topic.chunks_exact(self.topics) {
            for (t, &c) in totals.iter_mut().zip(row) {
                *t += u64::from(c);
            }
        }
        if totals != self.topic_totals {
            return Err(format!(
                "topic totals {:?} disagree with summed counts {:?}",
                self.topic_totals, totals
            ));
        }
        Ok(())
    }
}

/// A point on the K-simplex: the topic mixture of one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TopicDistribution(Vec<f64>);

impl TopicDistribution {
    /// Accepts non-negative finite entries summing to 1 within 1e-9.
    pub fn new(theta: Vec<f64>) -> Option<Self> {
        let valid = !theta.is_empty()
            && theta.iter().all(|&p| p >= 0.0 && p.is_finite())
            && (theta.iter().sum::<f64>() - 1.0).abs() <= 1e-9;
        valid.then_some(TopicDistribution(theta))
    }

    pub fn uniform(topics: usize) -> Self {
        TopicDistribution(vec![1.0 / topics as f64; topics])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn argmax(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (k, &p)| {
                if p > best.1 {
                    (k, p)
                } else {
                    best
                }
            })
            .0
    }
}

/// Smoothed topic–word distributions, one row per topic.
pub fn phi(model: &TopicModel) -> Vec<Vec<f64>> {
    let v = model.vocab.len();
    let beta = model.config.beta;
    model
        .topic_totals
        .iter()
        .enumerate()
        .map(|(k, &total)| {
            let denom = total as f64 + v as f64 * beta;
            (0..v as u32)
                .map(|w| (f64::from(model.count(k, w)) + beta) / denom)
                .collect()
        })
        .collect()
}

/// Trains a model on `docs`, whose token ids index `vocab`.
pub fn train(
    docs: &[EncodedDocument],
    vocab: &Vocabulary,
    config: &LdaConfig,
) -> Result<TopicModel, LdaError> {
    let mut sampler = GibbsSampler::new(docs, vocab.len(), config)?;
    for _ in 0..config.train_iters {
        sampler.sweep();
    }
    Ok(sampler.into_model(vocab.clone()))
}
