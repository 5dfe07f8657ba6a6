use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{LdaConfig, LdaError, TopicModel};
use crate::corpus::{EncodedDocument, Vocabulary};
use crate::seed;

/// Unnormalized full conditional of one token's topic, written into `out`.
///
/// `doc_topic`, `word_topic` and `topic_totals` must already exclude the
/// token being resampled. Weight k is
/// `(n_dk + alpha) * (n_kw + beta) / (n_k + V * beta)`.
pub fn conditional_weights(
    doc_topic: &[u32],
    word_topic: &[u32],
    topic_totals: &[u64],
    alpha: f64,
    beta: f64,
    vocab_size: usize,
    out: &mut [f64],
) {
    let v_beta = vocab_size as f64 * beta;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = (f64::from(doc_topic[k]) + alpha) * (f64::from(word_topic[k]) + beta)
            / (topic_totals[k] as f64 + v_beta);
    }
}

/// Draws an index with probability proportional to `weights`.
pub(crate) fn draw(weights: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (k, &w) in weights.iter().enumerate() {
        if u < w {
            return k;
        }
        u -= w;
    }
    weights.len() - 1
}

/// Collapsed Gibbs sampler state over a training corpus.
///
/// Holds the per-token assignments `z`, the document–topic counts `n_dk`,
/// the topic–word counts `n_kw` and the topic totals `n_k`. All four are kept
/// consistent after every call to [`GibbsSampler::sweep`].
pub struct GibbsSampler<'a> {
    docs: &'a [EncodedDocument],
    topics: usize,
    vocab_size: usize,
    config: LdaConfig,
    assignments: Vec<Vec<u32>>,
    doc_topic: Vec<u32>,
    word_topic: Vec<u32>,
    topic_totals: Vec<u64>,
    rng: ChaCha8Rng,
    scratch: Vec<f64>,
    sweeps: usize,
}

impl<'a> GibbsSampler<'a> {
    /// Validates the input and assigns every token a uniformly random topic.
    pub fn new(
        docs: &'a [EncodedDocument],
        vocab_size: usize,
        config: &LdaConfig,
    ) -> Result<Self, LdaError> {
        config.validate()?;
        for doc in docs {
            if let Some(&id) = doc.tokens.iter().find(|&&id| id as usize >= vocab_size) {
                return Err(LdaError::TokenOutOfRange {
                    doc: doc.instance_id.clone(),
                    id,
                    vocab: vocab_size,
                });
            }
        }
        if docs.iter().all(EncodedDocument::is_empty) {
            return Err(LdaError::NoTokens(docs.len()));
        }

        let topics = config.topics;
        let mut rng = seed::stream(config.seed, "lda-train");
        let mut doc_topic = vec![0u32; docs.len() * topics];
        let mut word_topic = vec![0u32; vocab_size * topics];
        let mut topic_totals = vec![0u64; topics];
        let assignments = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                doc.tokens
                    .iter()
                    .map(|&w| {
                        let k = rng.random_range(0..topics);
                        doc_topic[d * topics + k] += 1;
                        word_topic[w as usize * topics + k] += 1;
                        topic_totals[k] += 1;
                        k as u32
                    })
                    .collect()
            })
            .collect();

        Ok(GibbsSampler {
            docs,
            topics,
            vocab_size,
            config: config.clone(),
            assignments,
            doc_topic,
            word_topic,
            topic_totals,
            rng,
            scratch: vec![0.0; topics],
            sweeps: 0,
        })
    }

    /// Resamples every token once, documents and positions in order.
    pub fn sweep(&mut self) {
        let k_count = self.topics;
        for (d, doc) in self.docs.iter().enumerate() {
            let dt = d * k_count;
            for (n, &w) in doc.tokens.iter().enumerate() {
                let wt = w as usize * k_count;
                let old = self.assignments[d][n] as usize;
                self.doc_topic[dt + old] -= 1;
                self.word_topic[wt + old] -= 1;
                self.topic_totals[old] -= 1;

                conditional_weights(
                    &self.doc_topic[dt..dt + k_count],
                    &self.word_topic[wt..wt + k_count],
                    &self.topic_totals,
                    self.config.alpha,
                    self.config.beta,
                    self.vocab_size,
                    &mut self.scratch,
                );
                let new = draw(&self.scratch, &mut self.rng);

                self.doc_topic[dt + new] += 1;
                self.word_topic[wt + new] += 1;
                self.topic_totals[new] += 1;
                self.assignments[d][n] = new as u32;
            }
        }
        self.sweeps += 1;
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Normalized full conditional for token `n` of document `d`.
    ///
    /// The current counts include the token; its own contribution is
    /// subtracted here, leaving the sampler state untouched.
    pub fn full_conditional(&self, d: usize, n: usize) -> Vec<f64> {
        let k_count = self.topics;
        let w = self.docs[d].tokens[n] as usize;
        let own = self.assignments[d][n] as usize;
        let mut doc_topic = self.doc_topic[d * k_count..(d + 1) * k_count].to_vec();
        let mut word_topic = self.word_topic[w * k_count..(w + 1) * k_count].to_vec();
        let mut totals = self.topic_totals.clone();
        doc_topic[own] -= 1;
        word_topic[own] -= 1;
        totals[own] -= 1;
        let mut out = vec![0.0; k_count];
        conditional_weights(
            &doc_topic,
            &word_topic,
            &totals,
            self.config.alpha,
            self.config.beta,
            self.vocab_size,
            &mut out,
        );
        let sum: f64 = out.iter().sum();
        out.iter_mut().for_each(|p| *p /= sum);
        out
    }

    /// z_dn for every document and position.
    pub fn assignments(&self) -> &[Vec<u32>] {
        &self.assignments
    }

    /// n_dk for document `d`.
    pub fn doc_topic_counts(&self, d: usize) -> &[u32] {
        &self.doc_topic[d * self.topics..(d + 1) * self.topics]
    }

    /// n_kw for word `w`, indexed by topic.
    pub fn word_topic_counts(&self, w: u32) -> &[u32] {
        let w = w as usize;
        &self.word_topic[w * self.topics..(w + 1) * self.topics]
    }

    pub fn topic_totals(&self) -> &[u64] {
        &self.topic_totals
    }

    /// Recomputes every count from the assignments and compares.
    pub fn check_invariants(&self) -> Result<(), String> {
        let k_count = self.topics;
        let mut doc_topic = vec![0u32; self.docs.len() * k_count];
        let mut word_topic = vec![0u32; self.vocab_size * k_count];
        for (d, (doc, z)) in self.docs.iter().zip(&self.assignments).enumerate() {
            if z.len() != doc.tokens.len() {
                return Err(format!(
                    "document {d}: {} assignments for {} tokens",
                    z.len(),
                    doc.tokens.len()
                ));
            }
            for (&w, &k) in doc.tokens.iter().zip(z) {
                if k as usize >= k_count {
                    return Err(format!("document {d}: topic {k} out of range"));
                }
                doc_topic[d * k_count + k as usize] += 1;
                word_topic[w as usize * k_count + k as usize] += 1;
            }
            let row_sum: u64 = self.doc_topic_counts(d).iter().map(|&c| u64::from(c)).sum();
            if row_sum != doc.tokens.len() as u64 {
                return Err(format!(
                    "document {d}: Σ_k n_dk = {row_sum} but N_d = {}",
                    doc.tokens.len()
                ));
            }
        }
        if doc_topic != self.doc_topic {
            return Err("n_dk disagrees with assignments".into());
        }
        if word_topic != self.word_topic {
            return Err("n_kw disagrees with assignments".into());
        }
        let mut totals = vec![0u64; k_count];
        for row in word_topic.chunks_exact(k_count) {
            for (t, &c) in totals.iter_mut().zip(row) {
                *t += u64::from(c);
            }
        }
        if totals != self.topic_totals {
            return Err("n_k disagrees with Σ_w n_kw".into());
        }
        let tokens: u64 = self.docs.iter().map(|d| d.tokens.len() as u64).sum();
        if totals.iter().sum::<u64>() != tokens {
            return Err(format!(
                "Σ_k n_k = {} but corpus has {tokens} tokens",
                totals.iter().sum::<u64>()
            ));
        }
        Ok(())
    }

    pub fn into_model(self, vocab: Vocabulary) -> TopicModel {
        assert_eq!(vocab.len(), self.vocab_size, "vocabulary size mismatch");
        TopicModel::from_word_major(vocab, self.word_topic, self.config)
    }
}
