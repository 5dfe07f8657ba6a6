use rand::Rng;

use super::gibbs::{conditional_weights, draw};
use super::{LdaConfig, TopicDistribution, TopicModel};
use crate::corpus::EncodedDocument;
use crate::seed;

/// Estimates θ for a held-out document against a frozen model.
///
/// Only the document's own assignments are resampled; the model's topic–word
/// counts never change. The topic count, `alpha` and `beta` come from the
/// model; `config` supplies the sweep counts and the seed. θ is the mean of
/// `(n_dk + alpha) / (N_d + K * alpha)` over the sweeps after burn-in.
///
/// The random stream is keyed by the instance id, so the result for a
/// document does not depend on which other documents are inferred or in
/// which order.
pub fn infer_theta(
    doc: &EncodedDocument,
    model: &TopicModel,
    config: &LdaConfig,
) -> TopicDistribution {
    let topics = model.topics();
    if doc.tokens.is_empty() || topics == 1 {
        return TopicDistribution::uniform(topics);
    }
    let alpha = model.config().alpha;
    let beta = model.config().beta;
    let vocab_size = model.vocab().len();
    let totals = model.topic_totals();
    let mut rng = seed::stream(config.seed, &format!("lda-infer:{}", doc.instance_id));

    let mut doc_topic = vec![0u32; topics];
    let mut z: Vec<usize> = doc
        .tokens
        .iter()
        .map(|_| {
            let k = rng.random_range(0..topics);
            doc_topic[k] += 1;
            k
        })
        .collect();

    let norm = doc.tokens.len() as f64 + topics as f64 * alpha;
    let mut theta = vec![0.0f64; topics];
    let mut samples = 0usize;
    let mut weights = vec![0.0f64; topics];
    let iters = config.infer_iters.max(1);
    let burn_in = config.infer_burn_in.min(iters - 1);
    for sweep in 0..iters {
        for (n, &w) in doc.tokens.iter().enumerate() {
            doc_topic[z[n]] -= 1;
            conditional_weights(
                &doc_topic,
                model.word_row(w),
                totals,
                alpha,
                beta,
                vocab_size,
                &mut weights,
            );
            let k = draw(&weights, &mut rng);
            doc_topic[k] += 1;
            z[n] = k;
        }
        if sweep >= burn_in {
            for (t, &c) in theta.iter_mut().zip(&doc_topic) {
                *t += (f64::from(c) + alpha) / norm;
            }
            samples += 1;
        }
    }
    let samples = samples as f64;
    theta.iter_mut().for_each(|t| *t /= samples);
    // Restore exact normalization after floating-point accumulation.
    let sum: f64 = theta.iter().sum();
    theta.iter_mut().for_each(|t| *t /= sum);
    TopicDistribution::new(theta).expect("average of simplex points is on the simplex")
}
