//! End-to-end sense induction: train → infer → cluster → score, per target
//! word, plus K sweeps and report emission.
//!
//! Every target word is an independent unit of work with its own random
//! streams, derived from the base seeds and the target name. Runs are
//! therefore identical whatever the worker count, and removing one word from
//! a corpus leaves every other word's result unchanged.

mod report;
mod thetas;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{kmeans_cosine, ClusterConfig, ClusterError, Clustering};
use crate::corpus::{
    build_vocabulary, encode, load_instances, load_key_file, tokenize, write_key_file, Corpus,
    CorpusError, CorpusFormat, Instance, KeyFile, Target,
};
use crate::lda::{self, infer_theta, LdaConfig, LdaError, TopicDistribution, TopicModel};
use crate::metrics::{ContingencyTable, MetricsError, ScoreReport};
use crate::seed;

pub use report::{
    contingency_json, contingency_text, score_keys, AggregateScores, Aggregates, Aggregation,
    Execution, RunReport, SweepRow, SweepTable, TargetReport, REPORT_SCHEMA,
};
pub use thetas::{parse_thetas, read_thetas, write_thetas, ThetaRecord};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Lda(#[from] LdaError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Config(String),
    #[error("{target}: {source}")]
    Target {
        target: Target,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn for_target(self, target: &Target) -> Self {
        PipelineError::Target {
            target: target.clone(),
            source: Box::new(self),
        }
    }
}

/// How many clusters to form per target word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClusterCount {
    Fixed(usize),
    /// As many clusters as the word has gold classes among its test instances.
    Gold,
}

impl std::str::FromStr for ClusterCount {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "gold" {
            return Ok(ClusterCount::Gold);
        }
        s.parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .map(ClusterCount::Fixed)
            .ok_or_else(|| format!("expected a positive cluster count or `gold`, got `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Instances to induce senses for.
    pub test_corpus: PathBuf,
    /// Unlabeled training instances; `None` trains on the test instances.
    pub train_corpus: Option<PathBuf>,
    pub gold: Option<PathBuf>,
    /// Base LDA settings. The seed is the base seed; each target derives its own.
    pub lda: LdaConfig,
    /// Base clustering settings. `clusters` is replaced per target from
    /// `cluster_count`; the seed is the base seed.
    pub cluster: ClusterConfig,
    pub cluster_count: ClusterCount,
    /// Aggregate shown as the headline score.
    pub aggregation: Aggregation,
    pub min_count: usize,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip, default = "default_workers")]
    pub workers: usize,
}

fn default_workers() -> usize {
    1
}

impl RunConfig {
    pub fn new(
        test_corpus: impl Into<PathBuf>,
        lda: LdaConfig,
        cluster_count: ClusterCount,
    ) -> Self {
        let seed = lda.seed;
        RunConfig {
            test_corpus: test_corpus.into(),
            train_corpus: None,
            gold: None,
            lda,
            cluster: ClusterConfig {
                seed,
                ..ClusterConfig::new(1)
            },
            cluster_count,
            aggregation: Aggregation::InstanceWeighted,
            min_count: 1,
            output_dir: None,
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.lda.validate()?;
        ClusterConfig {
            clusters: 1,
            ..self.cluster.clone()
        }
        .validate()?;
        if self.cluster_count == ClusterCount::Gold && self.gold.is_none() {
            return Err(PipelineError::Config(
                "cluster count `gold` requires a gold key file".into(),
            ));
        }
        if self.cluster_count == ClusterCount::Fixed(0) {
            return Err(PipelineError::Config(
                "cluster count must be at least 1".into(),
            ));
        }
        if self.workers == 0 {
            return Err(PipelineError::Config(
                "worker count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// The settings that determine results, as echoed in a report. Output
    /// location and worker count are reset because they never change scores.
    pub fn echo(&self) -> RunConfig {
        RunConfig {
            output_dir: None,
            workers: default_workers(),
            ..self.clone()
        }
    }
}

/// LDA settings for `target`: the base settings with a target-specific seed.
pub fn target_lda_config(base: &LdaConfig, target: &Target) -> LdaConfig {
    LdaConfig {
        seed: seed::derive(base.seed, &format!("lda:{target}")),
        ..base.clone()
    }
}

/// Clustering settings for `target` with `clusters` clusters.
pub fn target_cluster_config(
    base: &ClusterConfig,
    target: &Target,
    clusters: usize,
) -> ClusterConfig {
    ClusterConfig {
        clusters,
        seed: seed::derive(base.seed, &format!("cluster:{target}")),
        ..base.clone()
    }
}

/// Builds the vocabulary from `train` and fits a topic model for `target`.
pub fn train_target(
    target: &Target,
    train: &[&Instance],
    base: &LdaConfig,
    min_count: usize,
) -> Result<TopicModel, PipelineError> {
    let token_docs: Vec<Vec<String>> = train.iter().map(|inst| tokenize(&inst.text)).collect();
    let vocab = build_vocabulary(&token_docs, min_count);
    let docs: Vec<_> = train.iter().map(|inst| encode(inst, &vocab)).collect();
    Ok(lda::train(&docs, &vocab, &target_lda_config(base, target))?)
}

/// Infers θ for every instance, in input order, using the model's own settings.
pub fn infer_target(
    model: &TopicModel,
    instances: &[&Instance],
) -> Vec<(String, TopicDistribution)> {
    instances
        .iter()
        .map(|inst| {
            let doc = encode(inst, model.vocab());
            (inst.id.clone(), infer_theta(&doc, model, model.config()))
        })
        .collect()
}

/// Number of distinct gold classes among `ids`.
pub fn gold_class_count<'a>(
    gold: &BTreeMap<String, String>,
    ids: impl IntoIterator<Item = &'a str>,
) -> usize {
    ids.into_iter()
        .filter_map(|id| gold.get(id))
        .collect::<BTreeSet<_>>()
        .len()
}

/// Resolves the cluster count for one target.
pub fn resolve_cluster_count<'a>(
    count: ClusterCount,
    gold: Option<&BTreeMap<String, String>>,
    ids: impl IntoIterator<Item = &'a str>,
) -> Result<usize, PipelineError> {
    match count {
        ClusterCount::Fixed(c) => Ok(c),
        ClusterCount::Gold => {
            let gold =
                gold.ok_or_else(|| PipelineError::Config("no gold labels for this target".into()))?;
            match gold_class_count(gold, ids) {
                0 => Err(PipelineError::Config(
                    "no test instance has a gold label".into(),
                )),
                c => Ok(c),
            }
        }
    }
}

/// Clusters the θ points of one target.
pub fn cluster_target(
    target: &Target,
    thetas: &[(String, TopicDistribution)],
    base: &ClusterConfig,
    clusters: usize,
) -> Result<Clustering, PipelineError> {
    let points: Vec<(&str, &[f64])> = thetas
        .iter()
        .map(|(id, theta)| (id.as_str(), theta.as_slice()))
        .collect();
    Ok(kmeans_cosine(
        &points,
        &target_cluster_config(base, target, clusters),
    )?)
}

/// Key-file label of cluster `index` of `target`.
pub fn cluster_label(target: &Target, index: usize) -> String {
    format!("{target}.cluster{index}")
}

pub fn system_labels(target: &Target, clustering: &Clustering) -> BTreeMap<String, String> {
    clustering
        .assignments
        .iter()
        .map(|(id, c)| (id.clone(), cluster_label(target, *c)))
        .collect()
}

/// Everything produced for one target word.
#[derive(Debug, Clone)]
pub struct TargetOutcome {
    pub target: Target,
    pub train_instances: usize,
    pub vocab_size: usize,
    pub thetas: Vec<(String, TopicDistribution)>,
    pub clustering: Clustering,
    pub table: Option<ContingencyTable>,
    pub score: Option<ScoreReport>,
}

/// Runs the full per-word pipeline. Scores only when `gold` is given.
pub fn run_target_word(
    target: &Target,
    train: &[&Instance],
    test: &[&Instance],
    gold: Option<&BTreeMap<String, String>>,
    config: &RunConfig,
) -> Result<TargetOutcome, PipelineError> {
    let inner = || -> Result<TargetOutcome, PipelineError> {
        if test.is_empty() {
            return Err(PipelineError::Config("no test instances".into()));
        }
        let model = train_target(target, train, &config.lda, config.min_count)?;
        let thetas = infer_target(&model, test);
        let clusters = resolve_cluster_count(
            config.cluster_count,
            gold,
            test.iter().map(|inst| inst.id.as_str()),
        )?;
        let clustering = cluster_target(target, &thetas, &config.cluster, clusters)?;
        let (table, score) = match gold {
            Some(gold) => {
                let table =
                    ContingencyTable::from_labels(gold, &system_labels(target, &clustering))?;
                let score = ScoreReport::from_table(&table);
                (Some(table), Some(score))
            }
            None => (None, None),
        };
        Ok(TargetOutcome {
            target: target.clone(),
            train_instances: train.len(),
            vocab_size: model.vocab().len(),
            thetas,
            clustering,
            table,
            score,
        })
    };
    inner().map_err(|e| e.for_target(target))
}

fn load_corpus(path: &Path) -> Result<Corpus, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus not found"),
        ));
    }
    Ok(load_instances(path, CorpusFormat::detect(path))?)
}

/// Gold labels of one target, or `None` if the key file lacks it.
fn gold_for<'a>(
    gold: Option<&'a KeyFile>,
    target: &Target,
) -> Option<&'a BTreeMap<String, String>> {
    gold.and_then(|key| key.labels(target))
}

/// Runs every target word of the test corpus.
///
/// Unreadable inputs and invalid configurations are fatal. A failure on one
/// target word is recorded in its report entry and does not stop the others.
/// When `output_dir` is set, the system key, the report and the tables are
/// written there.
pub fn run_all(config: &RunConfig) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let started = Instant::now();
    let test = load_corpus(&config.test_corpus)?;
    let train = match &config.train_corpus {
        Some(path) => Some(load_corpus(path)?),
        None => None,
    };
    let gold = config.gold.as_deref().map(load_key_file).transpose()?;

    if let Some(train) = &train {
        let test_targets: BTreeSet<_> = test.targets().into_iter().collect();
        let train_targets: BTreeSet<_> = train.targets().into_iter().collect();
        if test_targets != train_targets {
            let show = |s: &BTreeSet<Target>| {
                s.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            return Err(PipelineError::Config(format!(
                "train and test corpora cover different target words: train {{{}}}, test {{{}}}",
                show(&train_targets),
                show(&test_targets)
            )));
        }
    }

    let groups = test.grouped();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<(Result<TargetOutcome, PipelineError>, u128)> = pool.install(|| {
        groups
            .par_iter()
            .map(|(target, test_instances)| {
                let t0 = Instant::now();
                let train_instances = match &train {
                    Some(train) => train.instances_of(target),
                    None => test_instances.clone(),
                };
                let outcome = run_target_word(
                    target,
                    &train_instances,
                    test_instances,
                    gold_for(gold.as_ref(), target),
                    config,
                );
                (outcome, t0.elapsed().as_millis())
            })
            .collect()
    });

    let mut per_target_ms = BTreeMap::new();
    let mut outcomes = Vec::with_capacity(results.len());
    for ((target, _), (outcome, ms)) in groups.iter().zip(results) {
        per_target_ms.insert(target.to_string(), ms);
        outcomes.push((target.clone(), outcome));
    }
    let report = RunReport::from_outcomes(
        Some(config.echo()),
        &outcomes,
        gold.is_some(),
        Execution {
            workers: config.workers,
            elapsed_ms: started.elapsed().as_millis(),
            per_target_ms,
        },
    )?;

    if let Some(dir) = &config.output_dir {
        write_outputs(dir, &outcomes, &report)?;
    }
    Ok(report)
}

fn write_outputs(
    dir: &Path,
    outcomes: &[(Target, Result<TargetOutcome, PipelineError>)],
    report: &RunReport,
) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut key = KeyFile::new();
    let mut thetas = Vec::new();
    for outcome in outcomes.iter().filter_map(|(_, o)| o.as_ref().ok()) {
        for (id, label) in system_labels(&outcome.target, &outcome.clustering) {
            key.insert(outcome.target.clone(), id, label);
        }
        thetas.extend(outcome.thetas.iter().map(|(id, theta)| ThetaRecord {
            id: id.clone(),
            target: Some(outcome.target.clone()),
            theta: theta.as_slice().to_vec(),
        }));
    }
    write_key_file(&key, &dir.join("system.key"))?;
    write_thetas(&thetas, &dir.join("thetas.jsonl"))?;
    report.write(dir)?;
    Ok(())
}

/// Runs the whole pipeline once per topic count.
///
/// `alpha` of `None` uses the default `50 / K` for every K. When the config
/// has an output directory, each run writes to its `k<K>` subdirectory and
/// the sweep table is written at the top level.
pub fn sweep_k(
    config: &RunConfig,
    k_values: &[usize],
    alpha: Option<f64>,
) -> Result<SweepTable, PipelineError> {
    let distinct: BTreeSet<_> = k_values.iter().collect();
    if distinct.len() < 2 {
        return Err(PipelineError::Config(
            "a K sweep needs at least two distinct topic counts".into(),
        ));
    }
    let mut rows = Vec::with_capacity(k_values.len());
    for &k in k_values {
        let mut run = config.clone();
        run.lda = LdaConfig {
            topics: k,
            alpha: alpha.unwrap_or(50.0 / k.max(1) as f64),
            ..config.lda.clone()
        };
        run.output_dir = config.output_dir.as_ref().map(|d| d.join(format!("k{k}")));
        let report = run_all(&run)?;
        rows.push(SweepRow::from_report(k, &report));
    }
    let table = SweepTable { rows };
    if let Some(dir) = &config.output_dir {
        table.write(dir)?;
    }
    Ok(table)
}
