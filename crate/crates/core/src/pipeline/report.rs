use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PipelineError, RunConfig, TargetOutcome};
use crate::corpus::{KeyFile, Pos, Target};
use crate::metrics::{ContingencyTable, ScoreReport};

pub const REPORT_SCHEMA: &str = "senseforge.report/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Scores of all instances pooled into one block-diagonal table.
    InstanceWeighted,
    /// Plain mean of per-word scores.
    Uniform,
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "instance-weighted" | "instance" => Ok(Aggregation::InstanceWeighted),
            "uniform" => Ok(Aggregation::Uniform),
            _ => Err(format!(
                "unknown aggregation `{s}` (instance-weighted | uniform)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetReport {
    pub target: Target,
    pub test_instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_instances: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    pub clusters: usize,
    pub cluster_sizes: Vec<usize>,
    pub score: Option<ScoreReport>,
    pub contingency: Option<ContingencyTable>,
    pub error: Option<String>,
}

impl TargetReport {
    fn failed(target: Target, error: String) -> Self {
        TargetReport {
            target,
            test_instances: 0,
            train_instances: None,
            vocab_size: None,
            clusters: 0,
            cluster_sizes: Vec::new(),
            score: None,
            contingency: None,
            error: Some(error),
        }
    }

    fn from_outcome(outcome: &TargetOutcome) -> Self {
        TargetReport {
            target: outcome.target.clone(),
            test_instances: outcome.thetas.len(),
            train_instances: Some(outcome.train_instances),
            vocab_size: Some(outcome.vocab_size),
            clusters: outcome.clustering.cluster_count(),
            cluster_sizes: outcome.clustering.sizes(),
            score: outcome.score.clone(),
            contingency: outcome.table.clone(),
            error: None,
        }
    }
}

/// Scores for all words, verbs only and nouns only. A group with no scored
/// word is `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateScores {
    pub all: Option<ScoreReport>,
    pub verbs: Option<ScoreReport>,
    pub nouns: Option<ScoreReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub instance_weighted: AggregateScores,
    pub uniform: AggregateScores,
}

impl Aggregates {
    pub fn get(&self, aggregation: Aggregation) -> &AggregateScores {
        match aggregation {
            Aggregation::InstanceWeighted => &self.instance_weighted,
            Aggregation::Uniform => &self.uniform,
        }
    }

    fn from_targets(targets: &[TargetReport]) -> Result<Self, PipelineError> {
        let group = |pos: Option<Pos>| {
            targets
                .iter()
                .filter(move |t| pos.is_none_or(|p| t.target.pos == p))
        };
        let weighted = |pos: Option<Pos>| -> Result<Option<ScoreReport>, PipelineError> {
            let tables: Vec<&ContingencyTable> =
                group(pos).filter_map(|t| t.contingency.as_ref()).collect();
            if tables.is_empty() {
                return Ok(None);
            }
            Ok(Some(ScoreReport::from_table(&ContingencyTable::concat(
                tables,
            )?)))
        };
        let uniform =
            |pos: Option<Pos>| ScoreReport::mean(group(pos).filter_map(|t| t.score.as_ref()));
        Ok(Aggregates {
            instance_weighted: AggregateScores {
                all: weighted(None)?,
                verbs: weighted(Some(Pos::Verb))?,
                nouns: weighted(Some(Pos::Noun))?,
            },
            uniform: AggregateScores {
                all: uniform(None),
                verbs: uniform(Some(Pos::Verb)),
                nouns: uniform(Some(Pos::Noun)),
            },
        })
    }
}

/// Run facts that legitimately differ between otherwise identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub workers: usize,
    pub elapsed_ms: u128,
    pub per_target_ms: BTreeMap<String, u128>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub config: Option<RunConfig>,
    pub headline: Aggregation,
    pub targets: Vec<TargetReport>,
    /// Present when gold labels were available.
    pub aggregates: Option<Aggregates>,
    pub execution: Option<Execution>,
}

impl RunReport {
    pub(super) fn from_outcomes(
        config: Option<RunConfig>,
        outcomes: &[(Target, Result<TargetOutcome, PipelineError>)],
        scored: bool,
        execution: Execution,
    ) -> Result<Self, PipelineError> {
        let targets = outcomes
            .iter()
            .map(|(target, outcome)| match outcome {
                Ok(o) => TargetReport::from_outcome(o),
                Err(e) => TargetReport::failed(target.clone(), e.to_string()),
            })
            .collect();
        let headline = config
            .as_ref()
            .map_or(Aggregation::InstanceWeighted, |c| c.aggregation);
        Self::from_targets(config, headline, targets, scored, Some(execution))
    }

    pub fn from_targets(
        config: Option<RunConfig>,
        headline: Aggregation,
        targets: Vec<TargetReport>,
        scored: bool,
        execution: Option<Execution>,
    ) -> Result<Self, PipelineError> {
        let aggregates = if scored {
            Some(Aggregates::from_targets(&targets)?)
        } else {
            None
        };
        Ok(RunReport {
            schema_version: REPORT_SCHEMA.to_string(),
            config,
            headline,
            targets,
            aggregates,
            execution,
        })
    }

    pub fn failures(&self) -> impl Iterator<Item = &TargetReport> {
        self.targets.iter().filter(|t| t.error.is_some())
    }

    pub fn has_failures(&self) -> bool {
        self.failures().next().is_some()
    }

    /// Headline aggregate over all words.
    pub fn headline_scores(&self) -> Option<&ScoreReport> {
        self.aggregates.as_ref()?.get(self.headline).all.as_ref()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    /// V-measure and F-score (×100) for All / Verbs / Nouns.
    pub fn scores_tsv(&self, aggregation: Aggregation) -> String {
        let mut out = String::from("\tAll\tVerbs\tNouns\n");
        let groups = self.aggregates.as_ref().map(|a| a.get(aggregation));
        let cell = |pick: fn(&AggregateScores) -> &Option<ScoreReport>,
                    value: fn(&ScoreReport) -> f64| {
            groups
                .and_then(|g| pick(g).as_ref())
                .map_or("-".to_string(), |r| format!("{:.1}", value(r)))
        };
        for (name, value) in [
            (
                "V-measure",
                (|r: &ScoreReport| r.percent.v_measure) as fn(&ScoreReport) -> f64,
            ),
            ("F-score", |r: &ScoreReport| r.percent.f_score),
        ] {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}",
                cell(|g| &g.all, value),
                cell(|g| &g.verbs, value),
                cell(|g| &g.nouns, value)
            );
        }
        out
    }

    /// One row per target word with all scores ×100.
    pub fn targets_tsv(&self) -> String {
        let mut out = String::from(
            "target\tinstances\tclusters\thomogeneity\tcompleteness\tv_measure\tpaired_precision\tpaired_recall\tf_score\terror\n",
        );
        for t in &self.targets {
            let scores = match &t.score {
                Some(s) => [
                    s.percent.homogeneity,
                    s.percent.completeness,
                    s.percent.v_measure,
                    s.percent.paired_precision,
                    s.percent.paired_recall,
                    s.percent.f_score,
                ]
                .iter()
                .map(|v| format!("{v:.1}"))
                .collect::<Vec<_>>()
                .join("\t"),
                None => ["-"; 6].join("\t"),
            };
            let error = t.error.as_deref().unwrap_or("").replace(['\t', '\n'], " ");
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{scores}\t{error}",
                t.target, t.test_instances, t.clusters
            );
        }
        out
    }

    /// Writes `report.json`, `scores.tsv`, `targets.tsv` and, for scored
    /// words, `contingency/<target>.{txt,json}` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let write = |name: &Path, content: String| {
            fs::write(name, content).map_err(|e| PipelineError::io(name, e))
        };
        write(&dir.join("report.json"), self.to_json())?;
        write(&dir.join("scores.tsv"), self.scores_tsv(self.headline))?;
        write(&dir.join("targets.tsv"), self.targets_tsv())?;
        let scored: Vec<_> = self
            .targets
            .iter()
            .filter_map(|t| t.contingency.as_ref().map(|c| (&t.target, c)))
            .collect();
        if !scored.is_empty() {
            let cdir = dir.join("contingency");
            fs::create_dir_all(&cdir).map_err(|e| PipelineError::io(&cdir, e))?;
            for (target, table) in scored {
                write(
                    &cdir.join(format!("{target}.txt")),
                    contingency_text(target, table),
                )?;
                let json = serde_json::to_string_pretty(&contingency_json(target, table))
                    .expect("table serializes");
                write(&cdir.join(format!("{target}.json")), json + "\n")?;
            }
        }
        Ok(())
    }
}

/// Cluster-by-class cross-tab: one line per cluster with its size and the
/// number of its instances in each gold class.
pub fn contingency_text(target: &Target, table: &ContingencyTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{target}: {} instances, {} gold classes, {} clusters",
        table.total(),
        table.classes.len(),
        table.clusters.len()
    );
    let label_width = table
        .clusters
        .iter()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max("cluster".len());
    let widths: Vec<usize> = table.classes.iter().map(|c| c.len().max(3)).collect();
    let _ = write!(out, "{:<label_width$}  {:>4}", "cluster", "size");
    for (class, w) in table.classes.iter().zip(&widths) {
        let _ = write!(out, "  {class:>w$}");
    }
    out.push('\n');
    let sizes = table.cluster_sizes();
    for (j, cluster) in table.clusters.iter().enumerate() {
        let _ = write!(out, "{cluster:<label_width$}  {:>4}", sizes[j]);
        for (row, w) in table.counts.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", row[j]);
        }
        out.push('\n');
    }
    if table.unclustered > 0 || table.unlabeled > 0 {
        let _ = writeln!(
            out,
            "excluded: {} gold-labeled but unclustered, {} clustered but unlabeled",
            table.unclustered, table.unlabeled
        );
    }
    out
}

pub fn contingency_json(target: &Target, table: &ContingencyTable) -> serde_json::Value {
    serde_json::json!({
        "target": target,
        "table": table,
    })
}

/// Scores a system key file against a gold key file, word by word.
///
/// Words of the system key missing from the gold key are reported as
/// failures.
pub fn score_keys(
    system: &KeyFile,
    gold: &KeyFile,
    headline: Aggregation,
) -> Result<RunReport, PipelineError> {
    let targets = system
        .iter()
        .map(|(target, labels)| {
            let Some(gold_labels) = gold.labels(target) else {
                return TargetReport::failed(target.clone(), format!("{target}: no gold labels"));
            };
            let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
            for label in labels.values() {
                *sizes.entry(label).or_default() += 1;
            }
            match ContingencyTable::from_labels(gold_labels, labels) {
                Ok(table) => TargetReport {
                    target: target.clone(),
                    test_instances: labels.len(),
                    train_instances: None,
                    vocab_size: None,
                    clusters: sizes.len(),
                    cluster_sizes: sizes.into_values().collect(),
                    score: Some(ScoreReport::from_table(&table)),
                    contingency: Some(table),
                    error: None,
                },
                Err(e) => TargetReport::failed(target.clone(), format!("{target}: {e}")),
            }
        })
        .collect();
    RunReport::from_targets(None, headline, targets, true, None)
}

/// One K of a topic-count sweep. Scores are the all-words aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub v_measure: Option<f64>,
    pub f_score: Option<f64>,
    pub uniform_v_measure: Option<f64>,
    pub uniform_f_score: Option<f64>,
    pub failed_targets: usize,
}

impl SweepRow {
    pub(super) fn from_report(k: usize, report: &RunReport) -> Self {
        let pick = |a: Aggregation| {
            report
                .aggregates
                .as_ref()
                .and_then(|g| g.get(a).all.as_ref())
        };
        let headline = pick(report.headline);
        let uniform = pick(Aggregation::Uniform);
        SweepRow {
            k,
            v_measure: headline.map(|s| s.v_measure),
            f_score: headline.map(|s| s.f_score),
            uniform_v_measure: uniform.map(|s| s.v_measure),
            uniform_f_score: uniform.map(|s| s.f_score),
            failed_targets: report.failures().count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the highest V-measure; the first such row on ties.
    pub fn best_by_v_measure(&self) -> Option<&SweepRow> {
        self.rows.iter().filter(|r| r.v_measure.is_some()).fold(
            None,
            |best: Option<&SweepRow>, r| match best {
                Some(b) if b.v_measure >= r.v_measure => Some(b),
                _ => Some(r),
            },
        )
    }

    /// K across, V-measure and F-score (×100) down.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("K");
        for r in &self.rows {
            let _ = write!(out, "\t{}", r.k);
        }
        out.push('\n');
        for (name, pick) in [
            (
                "V-measure",
                (|r: &SweepRow| r.v_measure) as fn(&SweepRow) -> Option<f64>,
            ),
            ("F-score", |r: &SweepRow| r.f_score),
        ] {
            out.push_str(name);
            for r in &self.rows {
                match pick(r) {
                    Some(v) => {
                        let _ = write!(out, "\t{:.1}", v * 100.0);
                    }
                    None => out.push_str("\t-"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let tsv = dir.join("sweep.tsv");
        fs::write(&tsv, self.to_tsv()).map_err(|e| PipelineError::io(&tsv, e))?;
        let json = dir.join("sweep.json");
        let body = serde_json::to_string_pretty(self).expect("sweep serializes") + "\n";
        fs::write(&json, body).map_err(|e| PipelineError::io(&json, e))
    }
}
