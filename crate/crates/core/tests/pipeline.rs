mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use senseforge::corpus::{load_instances, CorpusFormat, KeyFile, Target};
use senseforge::lda::LdaConfig;
use senseforge::metrics::ContingencyTable;
use senseforge::pipeline::{
    contingency_json, contingency_text, run_all, run_target_word, sweep_k, ClusterCount,
    PipelineError, RunConfig, RunReport,
};

fn lda(topics: usize, iters: usize) -> LdaConfig {
    LdaConfig {
        train_iters: iters,
        seed: 11,
        ..LdaConfig::with_topics(topics)
    }
}

/// Writes corpus and gold key for the given sense corpora into `dir`.
fn fixture(dir: &Path, corpora: &[common::SenseCorpus]) -> RunConfig {
    let corpus = dir.join("corpus.jsonl");
    let gold = dir.join("gold.key");
    common::write(
        &corpus,
        &corpora.iter().map(|c| c.jsonl.as_str()).collect::<String>(),
    );
    common::write(
        &gold,
        &corpora.iter().map(|c| c.key.as_str()).collect::<String>(),
    );
    let mut cfg = RunConfig::new(&corpus, lda(10, 100), ClusterCount::Fixed(4));
    cfg.gold = Some(gold);
    cfg
}

fn senses_of(corpora: &[common::SenseCorpus]) -> BTreeMap<String, usize> {
    corpora.iter().flat_map(|c| c.senses.clone()).collect()
}

#[test]
fn promotion_shaped_fixture_clusters_every_instance() {
    let dir = tempfile::tempdir().unwrap();
    let promo = common::sense_corpus_sized(5, "promotion.n", &[4, 9, 13, 1]);
    let cfg = fixture(dir.path(), &[promo]);
    let corpus = load_instances(&cfg.test_corpus, CorpusFormat::Jsonl).unwrap();
    let instances: Vec<_> = corpus.instances().iter().collect();
    assert_eq!(instances.len(), 27);
    let target: Target = "promotion.n".parse().unwrap();
    let outcome = run_target_word(&target, &instances, &instances, None, &cfg).unwrap();
    assert_eq!(outcome.clustering.assignments.len(), 27);
    assert_eq!(outcome.clustering.cluster_count(), 4);
    assert!(outcome.clustering.sizes().iter().all(|&s| s > 0));
    assert!(outcome.score.is_none());
}

#[test]
fn contingency_report_for_promotion_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let promo = common::sense_corpus_sized(5, "promotion.n", &[4, 9, 13, 1]);
    let mut cfg = fixture(dir.path(), &[promo]);
    cfg.cluster_count = ClusterCount::Gold;
    let report = run_all(&cfg).unwrap();
    let entry = &report.targets[0];
    let table = entry.contingency.as_ref().unwrap();
    assert_eq!(table.class_sizes(), [4, 9, 13, 1]);
    assert_eq!(entry.clusters, 4);
    let text = contingency_text(&entry.target, table);
    for (line, size) in text.lines().skip(2).zip(table.cluster_sizes()) {
        let cells: Vec<u64> = line
            .split_whitespace()
            .skip(1)
            .map(|c| c.parse().unwrap())
            .collect();
        assert_eq!(cells[0], size);
        assert_eq!(cells[1..].iter().sum::<u64>(), size);
    }
    let json = contingency_json(&entry.target, table);
    let back: ContingencyTable = serde_json::from_str(&json["table"].to_string()).unwrap();
    assert_eq!(&back, table);
}

#[test]
fn one_topic_one_cluster_scores_zero_v_measure() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = fixture(dir.path(), &[common::sense_corpus(2, "bank.n", 3, 5)]);
    cfg.lda = lda(1, 5);
    cfg.cluster_count = ClusterCount::Fixed(1);
    let report = run_all(&cfg).unwrap();
    let score = report.targets[0].score.as_ref().unwrap();
    assert_eq!(score.v_measure, 0.0);
    assert_eq!(report.targets[0].cluster_sizes, [15]);
}

#[test]
fn separable_senses_are_recovered() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = common::sense_corpus(21, "bank.n", 4, 40);
    let senses = corpus.senses.clone();
    let mut cfg = fixture(dir.path(), &[corpus]);
    cfg.lda = lda(50, 300);
    let report = run_all(&cfg).unwrap();
    let out = tempfile::tempdir().unwrap();
    cfg.output_dir = Some(out.path().to_path_buf());
    run_all(&cfg).unwrap();
    let key = senseforge::corpus::load_key_file(&out.path().join("system.key")).unwrap();
    let target: Target = "bank.n".parse().unwrap();
    let clusters: BTreeMap<String, usize> = key
        .labels(&target)
        .unwrap()
        .iter()
        .map(|(id, label)| {
            (
                id.clone(),
                label.rsplit("cluster").next().unwrap().parse().unwrap(),
            )
        })
        .collect();
    let purity = common::purity(&clusters, &senses);
    assert!(purity >= 0.9, "purity {purity}");
    assert!(report.targets[0].score.as_ref().unwrap().v_measure >= 0.7);
}

fn two_target_config(dir: &Path) -> (RunConfig, Vec<common::SenseCorpus>) {
    let corpora = vec![
        common::sense_corpus(1, "bank.n", 3, 8),
        common::sense_corpus(2, "argue.v", 2, 10),
    ];
    let mut cfg = fixture(dir, &corpora);
    cfg.cluster_count = ClusterCount::Fixed(3);
    (cfg, corpora)
}

#[test]
fn report_structure_and_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, corpora) = two_target_config(dir.path());
    let report = run_all(&cfg).unwrap();
    assert_eq!(report.targets.len(), 2);
    assert!(!report.has_failures());
    let agg = report.aggregates.as_ref().unwrap();
    for group in [&agg.instance_weighted, &agg.uniform] {
        assert!(group.all.is_some() && group.verbs.is_some() && group.nouns.is_some());
    }
    assert_eq!(agg.instance_weighted.all.as_ref().unwrap().instances, 44);
    assert_eq!(senses_of(&corpora).len(), 44);

    // Independent recomputation: V-measure of the block-diagonal union.
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let total_cols: usize = report
        .targets
        .iter()
        .map(|t| t.contingency.as_ref().unwrap().clusters.len())
        .sum();
    let mut col0 = 0;
    for t in &report.targets {
        let table = t.contingency.as_ref().unwrap();
        for row in &table.counts {
            let mut full = vec![0u64; total_cols];
            full[col0..col0 + row.len()].copy_from_slice(row);
            rows.push(full);
        }
        col0 += table.clusters.len();
    }
    let expected = v_measure_oracle(&rows);
    let got = agg.instance_weighted.all.as_ref().unwrap().v_measure;
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");

    let per_word: Vec<f64> = report
        .targets
        .iter()
        .map(|t| t.score.as_ref().unwrap().v_measure)
        .collect();
    let uniform = agg.uniform.all.as_ref().unwrap().v_measure;
    assert!((uniform - (per_word[0] + per_word[1]) / 2.0).abs() < 1e-15);
}

/// V-measure from the entropy definitions, natural log.
fn v_measure_oracle(a: &[Vec<u64>]) -> f64 {
    let n: f64 = a.iter().flatten().sum::<u64>() as f64;
    let rows: Vec<f64> = a.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let cols: Vec<f64> = (0..a[0].len())
        .map(|j| a.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let h = |m: &[f64]| {
        -m.iter()
            .filter(|&&x| x > 0.0)
            .map(|&x| x / n * (x / n).ln())
            .sum::<f64>()
    };
    let (mut h_gs_c, mut h_c_gs) = (0.0, 0.0);
    for (i, r) in a.iter().enumerate() {
        for (j, &x) in r.iter().enumerate() {
            if x > 0 {
                let x = x as f64;
                h_gs_c -= x / n * (x / cols[j]).ln();
                h_c_gs -= x / n * (x / rows[i]).ln();
            }
        }
    }
    let hom = if h(&rows) == 0.0 {
        1.0
    } else {
        1.0 - h_gs_c / h(&rows)
    };
    let com = if h(&cols) == 0.0 {
        1.0
    } else {
        1.0 - h_c_gs / h(&cols)
    };
    if hom + com == 0.0 {
        0.0
    } else {
        2.0 * hom * com / (hom + com)
    }
}

fn without_execution(report: &RunReport) -> String {
    let mut r = report.clone();
    r.execution = None;
    r.to_json()
}

#[test]
fn rerun_is_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, _) = two_target_config(dir.path());
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    cfg.output_dir = Some(out1.clone());
    cfg.workers = 1;
    let r1 = run_all(&cfg).unwrap();
    cfg.output_dir = Some(out2.clone());
    cfg.workers = 4;
    let r2 = run_all(&cfg).unwrap();
    assert_eq!(without_execution(&r1), without_execution(&r2));
    for file in ["system.key", "thetas.jsonl", "scores.tsv", "targets.tsv"] {
        assert_eq!(
            fs::read(out1.join(file)).unwrap(),
            fs::read(out2.join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn removing_a_word_leaves_others_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let (cfg, corpora) = two_target_config(dir.path());
    let full = run_all(&cfg).unwrap();
    let reduced_dir = tempfile::tempdir().unwrap();
    let reduced = run_all(&fixture(reduced_dir.path(), &corpora[..1]).clone_with(&cfg)).unwrap();
    assert_eq!(reduced.targets.len(), 1);
    assert_eq!(reduced.targets[0], full.targets[0]);
}

trait CloneWith {
    fn clone_with(self, template: &RunConfig) -> RunConfig;
}

impl CloneWith for RunConfig {
    fn clone_with(self, template: &RunConfig) -> RunConfig {
        RunConfig {
            test_corpus: self.test_corpus,
            gold: self.gold,
            ..template.clone()
        }
    }
}

#[test]
fn degenerate_word_does_not_sink_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let good = common::sense_corpus(4, "bank.n", 2, 6);
    let corpus = dir.path().join("c.jsonl");
    let bad = concat!(
        r#"{"target":"empty.n","id":"e1","text":"123 456"}"#,
        "\n",
        r#"{"target":"empty.n","id":"e2","text":"..."}"#,
        "\n",
    );
    common::write(&corpus, &format!("{}{bad}", good.jsonl));
    let gold = dir.path().join("g.key");
    common::write(&gold, &good.key);
    let mut cfg = RunConfig::new(&corpus, lda(5, 20), ClusterCount::Fixed(2));
    cfg.gold = Some(gold);
    let report = run_all(&cfg).unwrap();
    assert!(report.has_failures());
    let failed: Vec<_> = report.failures().map(|t| t.target.to_string()).collect();
    assert_eq!(failed, ["empty.n"]);
    assert!(report.targets[1]
        .error
        .as_ref()
        .unwrap()
        .contains("no tokens"));
    assert!(report.headline_scores().is_some());
}

#[test]
fn fatal_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::new(
        dir.path().join("missing.jsonl"),
        lda(5, 5),
        ClusterCount::Fixed(2),
    );
    assert!(matches!(run_all(&cfg), Err(PipelineError::Io { .. })));

    let (mut cfg, _) = two_target_config(dir.path());
    let train = dir.path().join("train.jsonl");
    common::write(&train, &common::sense_corpus(9, "bank.n", 2, 3).jsonl);
    cfg.train_corpus = Some(train);
    assert!(matches!(run_all(&cfg), Err(PipelineError::Config(_))));
}

#[test]
fn separate_training_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let test = common::sense_corpus(31, "bank.n", 2, 10);
    let mut train = common::sense_corpus(32, "bank.n", 2, 30);
    train.jsonl = train.jsonl.replace("bank.n.", "train.bank.n.");
    let mut cfg = fixture(dir.path(), &[test]);
    let train_path = dir.path().join("train.jsonl");
    common::write(&train_path, &train.jsonl);
    cfg.train_corpus = Some(train_path);
    cfg.cluster_count = ClusterCount::Fixed(2);
    let report = run_all(&cfg).unwrap();
    let entry = &report.targets[0];
    assert_eq!(entry.train_instances, Some(60));
    assert_eq!(entry.test_instances, 20);
}

#[test]
fn sweep_needs_two_values_and_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, _) = two_target_config(dir.path());
    cfg.lda.train_iters = 20;
    assert!(matches!(
        sweep_k(&cfg, &[5], None),
        Err(PipelineError::Config(_))
    ));
    assert!(matches!(
        sweep_k(&cfg, &[5, 5], None),
        Err(PipelineError::Config(_))
    ));
    let out = dir.path().join("sweep");
    cfg.output_dir = Some(out.clone());
    let table = sweep_k(&cfg, &[2, 5], None).unwrap();
    assert_eq!(table.rows.iter().map(|r| r.k).collect::<Vec<_>>(), [2, 5]);
    let tsv = fs::read_to_string(out.join("sweep.tsv")).unwrap();
    assert!(tsv.starts_with("K\t2\t5\nV-measure\t"));
    assert!(out.join("k2/report.json").exists());
    let report =
        RunReport::from_json(&fs::read_to_string(out.join("k5/report.json")).unwrap()).unwrap();
    assert_eq!(report.config.unwrap().lda.alpha, 10.0);
}

#[test]
fn gold_policy_matches_class_count() {
    let dir = tempfile::tempdir().unwrap();
    let (mut cfg, _) = two_target_config(dir.path());
    cfg.cluster_count = ClusterCount::Gold;
    let report = run_all(&cfg).unwrap();
    assert_eq!(
        report
            .targets
            .iter()
            .map(|t| t.clusters)
            .collect::<Vec<_>>(),
        [3, 2]
    );
    let _ = KeyFile::new();
}
