//! Language-independent word sense induction.
//!
//! For every target word a topic model is trained on unlabeled instances of
//! that word, each test instance is mapped to its topic distribution, and the
//! distributions are clustered with cosine K-means. Each cluster is one
//! induced sense. Induced senses are scored against gold keys with V-measure
//! and the paired F-score.
//!
//! Modules, bottom up:
//!
//! - [`corpus`]: instance corpora, tokenization, vocabularies, key files.
//! - [`lda`]: collapsed Gibbs LDA training, held-out inference, model files.
//! - [`clustering`]: spherical (cosine) K-means.
//! - [`metrics`]: contingency tables, homogeneity, completeness, V-measure,
//!   paired F-score.
//! - [`pipeline`]: per-word orchestration, full runs, K sweeps and reports.

pub mod clustering;
pub mod corpus;
pub mod lda;
pub mod metrics;
pub mod pipeline;
pub mod seed;

pub use clustering::{cosine_similarity, kmeans_cosine, ClusterConfig, Clustering};
pub use corpus::{
    build_vocabulary, encode, load_instances, load_key_file, tokenize, write_key_file,
    CorpusFormat, EncodedDocument, Instance, KeyFile, Pos, Target, Vocabulary,
};
pub use lda::{infer_theta, phi, train, LdaConfig, TopicDistribution, TopicModel};
pub use metrics::{ContingencyTable, ScoreReport};
pub use pipeline::{run_all, run_target_word, sweep_k, ClusterCount, RunConfig, RunReport};
