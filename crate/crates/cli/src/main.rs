//! `senseforge`: word sense induction from the command line.
//!
//! Exit status is 0 on success, 1 on a fatal error, 2 on a usage error and 3
//! when the run finished but at least one target word failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use senseforge::clustering::ClusterConfig;
use senseforge::corpus::{
    load_instances, load_key_file, write_key_file, Corpus, CorpusFormat, KeyFile, Target,
};
use senseforge::lda::{read_model, write_model, LdaConfig, TopicDistribution};
use senseforge::pipeline::{
    cluster_target, infer_target, read_thetas, resolve_cluster_count, score_keys, sweep_k,
    system_labels, train_target, write_thetas, Aggregation, ClusterCount, RunConfig, RunReport,
    ThetaRecord,
};

#[derive(Parser)]
#[command(
    name = "senseforge",
    version,
    about = "Word sense induction with LDA topics and cosine k-means"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one topic model per target word.
    Train(TrainArgs),
    /// Infer topic distributions for held-out instances.
    Infer(InferArgs),
    /// Cluster topic distributions into senses and write a system key.
    Cluster(ClusterArgs),
    /// Score a system key against a gold key.
    Score(ScoreArgs),
    /// Train, infer, cluster and score every target word.
    Run(RunArgs),
    /// Repeat `run` for several topic counts.
    SweepK(SweepArgs),
}

#[derive(Args)]
struct SeedArg {
    /// Base random seed; per-target seeds are derived from it.
    #[arg(long, env = "SENSEFORGE_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Args)]
struct LdaArgs {
    /// Number of topics.
    #[arg(long, default_value_t = 400)]
    k: usize,
    /// Document–topic prior; defaults to 50 / K.
    #[arg(long)]
    alpha: Option<f64>,
    /// Topic–word prior.
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    /// Training sweeps.
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    /// Inference sweeps per instance.
    #[arg(long, default_value_t = 100)]
    infer_iters: usize,
    /// Inference sweeps discarded before averaging.
    #[arg(long, default_value_t = 50)]
    burn_in: usize,
    /// Minimum corpus frequency for a word to enter the vocabulary.
    #[arg(long, default_value_t = 1)]
    min_count: usize,
}

impl LdaArgs {
    fn config(&self, seed: u64) -> LdaConfig {
        let base = LdaConfig::with_topics(self.k);
        LdaConfig {
            alpha: self.alpha.unwrap_or(base.alpha),
            beta: self.beta,
            train_iters: self.iters,
            infer_iters: self.infer_iters,
            infer_burn_in: self.burn_in,
            seed,
            ..base
        }
    }
}

#[derive(Args)]
struct KmeansArgs {
    /// Clusters per target word: a number, or `gold` for the gold class count.
    #[arg(long)]
    clusters: ClusterCount,
    /// k-means restarts; the lowest objective wins.
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    /// Lloyd iterations per restart.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
}

impl KmeansArgs {
    fn config(&self, seed: u64) -> ClusterConfig {
        ClusterConfig {
            max_iters: self.max_iters,
            seed,
            restarts: self.restarts,
            ..ClusterConfig::new(1)
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Training instances (JSONL file or corpus directory).
    #[arg(long)]
    corpus: PathBuf,
    #[command(flatten)]
    lda: LdaArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Directory for the `<target>.model` files.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Directory of `<target>.model` files.
    #[arg(long)]
    models: PathBuf,
    /// Test instances (JSONL file or corpus directory).
    #[arg(long)]
    corpus: PathBuf,
    /// θ output, one JSON object per line.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ClusterArgs {
    /// θ file written by `infer`.
    #[arg(long)]
    thetas: PathBuf,
    #[command(flatten)]
    kmeans: KmeansArgs,
    /// Gold key; required by `--clusters gold`.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
    /// System key output.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    system: PathBuf,
    #[arg(long)]
    gold: PathBuf,
    /// Report JSON output. The score table is printed as TSV either way.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate shown first: `instance-weighted` or `uniform`.
    #[arg(long, default_value = "instance-weighted")]
    aggregation: Aggregation,
}

#[derive(Args)]
struct RunArgs {
    /// Test instances (JSONL file or corpus directory).
    #[arg(long)]
    corpus: PathBuf,
    /// Separate training instances; defaults to the test instances.
    #[arg(long)]
    train_corpus: Option<PathBuf>,
    /// Gold key for scoring.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[command(flatten)]
    lda: LdaArgs,
    #[command(flatten)]
    kmeans: KmeansArgs,
    #[command(flatten)]
    seed: SeedArg,
    /// Target words processed in parallel.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Headline aggregate: `instance-weighted` or `uniform`.
    #[arg(long, default_value = "instance-weighted")]
    aggregation: Aggregation,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        let seed = self.seed.seed;
        let mut config = RunConfig::new(&self.corpus, self.lda.config(seed), self.kmeans.clusters);
        config.train_corpus = self.train_corpus.clone();
        config.gold = self.gold.clone();
        config.cluster = self.kmeans.config(seed);
        config.aggregation = self.aggregation;
        config.min_count = self.lda.min_count;
        config.output_dir = Some(self.out.clone());
        config.workers = self.workers;
        config
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated topic counts.
    #[arg(long, value_delimiter = ',', required = true)]
    k_values: Vec<usize>,
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    load_instances(path, CorpusFormat::detect(path))
        .with_context(|| format!("loading {}", path.display()))
}

/// Prints per-target failures; returns whether there were any.
fn report_failures(failures: impl IntoIterator<Item = (String, String)>) -> bool {
    let mut any = false;
    for (target, message) in failures {
        eprintln!("error: {target}: {message}");
        any = true;
    }
    any
}

fn train(args: &TrainArgs) -> Result<bool> {
    let corpus = load_corpus(&args.corpus)?;
    let config = args.lda.config(args.seed.seed);
    config.validate()?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut failures = Vec::new();
    for (target, instances) in corpus.grouped() {
        match train_target(&target, &instances, &config, args.lda.min_count) {
            Ok(model) => {
                let path = args.out.join(format!("{target}.model"));
                write_model(&model, &target.to_string(), &path)?;
            }
            Err(e) => failures.push((target.to_string(), e.to_string())),
        }
    }
    Ok(report_failures(failures))
}

fn infer(args: &InferArgs) -> Result<bool> {
    let corpus = load_corpus(&args.corpus)?;
    let mut models = BTreeMap::new();
    let entries =
        fs::read_dir(&args.models).with_context(|| format!("reading {}", args.models.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "model") {
            let (label, model) = read_model(&path)?;
            let target: Target = label
                .parse()
                .with_context(|| format!("{}: bad target label", path.display()))?;
            models.insert(target, model);
        }
    }
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for (target, instances) in corpus.grouped() {
        let Some(model) = models.get(&target) else {
            failures.push((target.to_string(), "no model".to_string()));
            continue;
        };
        records.extend(
            infer_target(model, &instances)
                .into_iter()
                .map(|(id, theta)| ThetaRecord {
                    id,
                    target: Some(target.clone()),
                    theta: theta.into_vec(),
                }),
        );
    }
    write_thetas(&records, &args.out)?;
    Ok(report_failures(failures))
}

fn cluster(args: &ClusterArgs) -> Result<bool> {
    let records = read_thetas(&args.thetas)?;
    let gold = match &args.gold {
        Some(path) => Some(load_key_file(path)?),
        None if args.kmeans.clusters == ClusterCount::Gold => {
            bail!("--clusters gold requires --gold")
        }
        None => None,
    };
    let base = args.kmeans.config(args.seed.seed);
    let mut groups: Vec<(Target, Vec<(String, TopicDistribution)>)> = Vec::new();
    for record in records {
        let target = record
            .resolved_target()
            .expect("parse_thetas checks targets");
        let theta = TopicDistribution::new(record.theta).with_context(|| {
            format!(
                "{}: θ of `{}` is not a distribution",
                args.thetas.display(),
                record.id
            )
        })?;
        match groups.iter_mut().find(|(t, _)| *t == target) {
            Some((_, points)) => points.push((record.id, theta)),
            None => groups.push((target, vec![(record.id, theta)])),
        }
    }
    let mut key = KeyFile::new();
    let mut failures = Vec::new();
    for (target, points) in &groups {
        let labels = gold.as_ref().and_then(|g| g.labels(target));
        let clustered = resolve_cluster_count(
            args.kmeans.clusters,
            labels,
            points.iter().map(|(id, _)| id.as_str()),
        )
        .and_then(|c| cluster_target(target, points, &base, c));
        match clustered {
            Ok(clustering) => {
                for (id, label) in system_labels(target, &clustering) {
                    key.insert(target.clone(), id, label);
                }
            }
            Err(e) => failures.push((target.to_string(), e.to_string())),
        }
    }
    write_key_file(&key, &args.out)?;
    Ok(report_failures(failures))
}

fn failures_of(report: &RunReport) -> impl Iterator<Item = (String, String)> + '_ {
    report
        .failures()
        .map(|t| (t.target.to_string(), t.error.clone().unwrap_or_default()))
}

fn score(args: &ScoreArgs) -> Result<bool> {
    let system = load_key_file(&args.system)?;
    let gold = load_key_file(&args.gold)?;
    let report = score_keys(&system, &gold, args.aggregation)?;
    if let Some(out) = &args.out {
        fs::write(out, report.to_json()).with_context(|| format!("writing {}", out.display()))?;
    }
    print!("{}", report.scores_tsv(args.aggregation));
    Ok(report_failures(failures_of(&report)))
}

fn run(args: &RunArgs) -> Result<bool> {
    let config = args.config();
    let report = senseforge::run_all(&config)?;
    if report.aggregates.is_some() {
        print!("{}", report.scores_tsv(config.aggregation));
    }
    Ok(report_failures(failures_of(&report)))
}

fn sweep(args: &SweepArgs) -> Result<bool> {
    let config = args.run.config();
    let table = sweep_k(&config, &args.k_values, args.run.lda.alpha)?;
    print!("{}", table.to_tsv());
    let mut failed = false;
    for k in &args.k_values {
        let path = args.run.out.join(format!("k{k}/report.json"));
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let report = RunReport::from_json(&text)?;
        failed |= report_failures(failures_of(&report).map(|(t, m)| (format!("K={k}: {t}"), m)));
    }
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Train(args) => train(args),
        Command::Infer(args) => infer(args),
        Command::Cluster(args) => cluster(args),
        Command::Score(args) => score(args),
        Command::Run(args) => run(args),
        Command::SweepK(args) => sweep(args),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
