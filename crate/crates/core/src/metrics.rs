//! External clustering evaluation: V-measure and paired F-score.
//!
//! Everything is computed from a [`ContingencyTable`] whose entry `a[i][j]`
//! counts instances of gold class `i` placed in cluster `j`.
//!
//! ```text
//! H(GS)   = -Σ_i (a_i. / N) log(a_i. / N)
//! H(GS|C) = -Σ_j Σ_i (a_ij / N) log(a_ij / a_.j)
//! homogeneity  = 1 - H(GS|C) / H(GS)      (1 when H(GS) = 0)
//! completeness = 1 - H(C|GS) / H(C)       (1 when H(C) = 0)
//! ```
//!
//! Zero cells contribute nothing (`0 log 0 = 0`).

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no instance carries both a gold label and a cluster")]
    NoOverlap,
    #[error("contingency table is empty")]
    Empty,
    #[error("malformed contingency table: {0}")]
    Shape(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    /// Gold class labels, one per row.
    pub classes: Vec<String>,
    /// Cluster labels, one per column.
    pub clusters: Vec<String>,
    /// `counts[i][j]`: instances of class `i` in cluster `j`.
    pub counts: Vec<Vec<u64>>,
    /// Gold-labeled instances that were not clustered.
    #[serde(default)]
    pub unclustered: usize,
    /// Clustered instances that have no gold label.
    #[serde(default)]
    pub unlabeled: usize,
}

impl ContingencyTable {
    /// Builds a table from counts, naming rows `c0..` and columns `k0..`.
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        let classes = (0..rows).map(|i| format!("c{i}")).collect();
        let clusters = (0..cols).map(|j| format!("k{j}")).collect();
        Self::with_labels(classes, clusters, counts)
    }

    pub fn with_labels(
        classes: Vec<String>,
        clusters: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, MetricsError> {
        if counts.len() != classes.len() || counts.iter().any(|r| r.len() != clusters.len()) {
            return Err(MetricsError::Shape(format!(
                "expected {}x{} counts",
                classes.len(),
                clusters.len()
            )));
        }
        let table = ContingencyTable {
            classes,
            clusters,
            counts,
            unclustered: 0,
            unlabeled: 0,
        };
        if table.total() == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(table)
    }

    /// Cross-tabulates gold labels against cluster labels by instance id.
    ///
    /// Instances present on only one side are excluded and counted in
    /// `unclustered` / `unlabeled`. Rows and columns are sorted by label.
    pub fn from_labels(
        gold: &BTreeMap<String, String>,
        system: &BTreeMap<String, String>,
    ) -> Result<Self, MetricsError> {
        let mut classes = BTreeSet::new();
        let mut clusters = BTreeSet::new();
        let mut pairs = Vec::new();
        let mut unclustered = 0;
        for (id, class) in gold {
            match system.get(id) {
                Some(cluster) => {
                    classes.insert(class.as_str());
                    clusters.insert(cluster.as_str());
                    pairs.push((class.as_str(), cluster.as_str()));
                }
                None => unclustered += 1,
            }
        }
        if pairs.is_empty() {
            return Err(MetricsError::NoOverlap);
        }
        let unlabeled = system.keys().filter(|id| !gold.contains_key(*id)).count();
        let class_ix: BTreeMap<&str, usize> =
            classes.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        let cluster_ix: BTreeMap<&str, usize> =
            clusters.iter().enumerate().map(|(j, c)| (*c, j)).collect();
        let mut counts = vec![vec![0u64; clusters.len()]; classes.len()];
        for (class, cluster) in pairs {
            counts[class_ix[class]][cluster_ix[cluster]] += 1;
        }
        Ok(ContingencyTable {
            classes: classes.into_iter().map(str::to_string).collect(),
            clusters: clusters.into_iter().map(str::to_string).collect(),
            counts,
            unclustered,
            unlabeled,
        })
    }

    /// N, the number of instances in the table.
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Class sizes (row sums).
    pub fn class_sizes(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Cluster sizes (column sums).
    pub fn cluster_sizes(&self) -> Vec<u64> {
        let mut sizes = vec![0u64; self.clusters.len()];
        for row in &self.counts {
            for (s, &c) in sizes.iter_mut().zip(row) {
                *s += c;
            }
        }
        sizes
    }

    /// Swaps the roles of classes and clusters.
    pub fn transposed(&self) -> Self {
        let counts = (0..self.clusters.len())
            .map(|j| self.counts.iter().map(|row| row[j]).collect())
            .collect();
        ContingencyTable {
            classes: self.clusters.clone(),
            clusters: self.classes.clone(),
            counts,
            unclustered: self.unlabeled,
            unlabeled: self.unclustered,
        }
    }

    /// Block-diagonal union of several tables, as if all their instances
    /// were scored together. Labels are prefixed with the block index.
    pub fn concat<'a>(
        tables: impl IntoIterator<Item = &'a ContingencyTable>,
    ) -> Result<Self, MetricsError> {
        let tables: Vec<&ContingencyTable> = tables.into_iter().collect();
        let rows: usize = tables.iter().map(|t| t.classes.len()).sum();
        let cols: usize = tables.iter().map(|t| t.clusters.len()).sum();
        let mut counts = vec![vec![0u64; cols]; rows];
        let mut classes = Vec::with_capacity(rows);
        let mut clusters = Vec::with_capacity(cols);
        let (mut r0, mut c0) = (0, 0);
        for (b, t) in tables.iter().enumerate() {
            classes.extend(t.classes.iter().map(|c| format!("{b}:{c}")));
            clusters.extend(t.clusters.iter().map(|c| format!("{b}:{c}")));
            for (i, row) in t.counts.iter().enumerate() {
                counts[r0 + i][c0..c0 + row.len()].copy_from_slice(row);
            }
            r0 += t.classes.len();
            c0 += t.clusters.len();
        }
        let mut table = Self::with_labels(classes, clusters, counts)?;
        table.unclustered = tables.iter().map(|t| t.unclustered).sum();
        table.unlabeled = tables.iter().map(|t| t.unlabeled).sum();
        Ok(table)
    }
}

/// Logarithm base used for entropies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogBase {
    Two,
    E,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Two => x.log2(),
            LogBase::E => x.ln(),
        }
    }
}

/// Entropy of the row marginal, H(GS).
pub fn class_entropy(t: &ContingencyTable, base: LogBase) -> f64 {
    let n = t.total() as f64;
    -t.class_sizes()
        .into_iter()
        .filter(|&s| s > 0)
        .map(|s| {
            let p = s as f64 / n;
            p * base.log(p)
        })
        .sum::<f64>()
}

/// Conditional entropy of classes given clusters, H(GS|C).
pub fn class_given_cluster_entropy(t: &ContingencyTable, base: LogBase) -> f64 {
    let n = t.total() as f64;
    let cluster_sizes = t.cluster_sizes();
    let mut h = 0.0;
    for (j, &size) in cluster_sizes.iter().enumerate() {
        for row in &t.counts {
            let a = row[j];
            if a > 0 {
                h -= a as f64 / n * base.log(a as f64 / size as f64);
            }
        }
    }
    h
}

pub fn homogeneity_in(t: &ContingencyTable, base: LogBase) -> f64 {
    let h_gs = class_entropy(t, base);
    if h_gs == 0.0 {
        return 1.0;
    }
    (1.0 - class_given_cluster_entropy(t, base) / h_gs).clamp(0.0, 1.0)
}

pub fn homogeneity(t: &ContingencyTable) -> f64 {
    homogeneity_in(t, LogBase::Two)
}

/// Completeness is homogeneity with classes and clusters exchanged.
pub fn completeness_in(t: &ContingencyTable, base: LogBase) -> f64 {
    homogeneity_in(&t.transposed(), base)
}

pub fn completeness(t: &ContingencyTable) -> f64 {
    completeness_in(t, LogBase::Two)
}

/// Harmonic mean, 0 when either side is 0.
pub fn harmonic_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        0.0
    } else {
        2.0 * a * b / (a + b)
    }
}

pub fn v_measure_in(t: &ContingencyTable, base: LogBase) -> f64 {
    harmonic_mean(homogeneity_in(t, base), completeness_in(t, base))
}

pub fn v_measure(t: &ContingencyTable) -> f64 {
    v_measure_in(t, LogBase::Two)
}

fn pairs(n: u64) -> u128 {
    let n = u128::from(n);
    n * n.saturating_sub(1) / 2
}

/// Pair counts: (co-clustered and co-classed, co-clustered, co-classed).
pub fn pair_counts(t: &ContingencyTable) -> (u128, u128, u128) {
    let common = t.counts.iter().flatten().map(|&a| pairs(a)).sum();
    let cluster = t.cluster_sizes().into_iter().map(pairs).sum();
    let class = t.class_sizes().into_iter().map(pairs).sum();
    (common, cluster, class)
}

/// Paired precision, recall and F-score over unordered instance pairs.
///
/// Precision is 0 when no pair shares a cluster and recall is 0 when no pair
/// shares a class.
pub fn paired_f_score(t: &ContingencyTable) -> (f64, f64, f64) {
    let (common, cluster, class) = pair_counts(t);
    let precision = if cluster == 0 {
        0.0
    } else {
        common as f64 / cluster as f64
    };
    let recall = if class == 0 {
        0.0
    } else {
        common as f64 / class as f64
    };
    (precision, recall, harmonic_mean(precision, recall))
}

/// Scores scaled by 100, as conventionally reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentScores {
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub paired_precision: f64,
    pub paired_recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub instances: u64,
    pub homogeneity: f64,
    pub completeness: f64,
    pub v_measure: f64,
    pub paired_precision: f64,
    pub paired_recall: f64,
    pub f_score: f64,
    pub percent: PercentScores,
}

impl ScoreReport {
    pub fn from_table(t: &ContingencyTable) -> Self {
        let homogeneity = homogeneity(t);
        let completeness = completeness(t);
        let (paired_precision, paired_recall, f_score) = paired_f_score(t);
        Self::from_parts(
            t.total(),
            homogeneity,
            completeness,
            harmonic_mean(homogeneity, completeness),
            paired_precision,
            paired_recall,
            f_score,
        )
    }

    fn from_parts(
        instances: u64,
        homogeneity: f64,
        completeness: f64,
        v_measure: f64,
        paired_precision: f64,
        paired_recall: f64,
        f_score: f64,
    ) -> Self {
        ScoreReport {
            instances,
            homogeneity,
            completeness,
            v_measure,
            paired_precision,
            paired_recall,
            f_score,
            percent: PercentScores {
                homogeneity: homogeneity * 100.0,
                completeness: completeness * 100.0,
                v_measure: v_measure * 100.0,
                paired_precision: paired_precision * 100.0,
                paired_recall: paired_recall * 100.0,
                f_score: f_score * 100.0,
            },
        }
    }

    /// Unweighted mean of each score across `reports`. The mean V-measure is
    /// the mean of per-word V-measures, not a harmonic mean of the means.
    pub fn mean<'a>(reports: impl IntoIterator<Item = &'a ScoreReport>) -> Option<Self> {
        let reports: Vec<&ScoreReport> = reports.into_iter().collect();
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let avg = |f: fn(&ScoreReport) -> f64| reports.iter().map(|r| f(r)).sum::<f64>() / n;
        Some(Self::from_parts(
            reports.iter().map(|r| r.instances).sum(),
            avg(|r| r.homogeneity),
            avg(|r| r.completeness),
            avg(|r| r.v_measure),
            avg(|r| r.paired_precision),
            avg(|r| r.paired_recall),
            avg(|r| r.f_score),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(counts: &[&[u64]]) -> ContingencyTable {
        ContingencyTable::from_counts(counts.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect()
    }

    #[test]
    fn contingency_from_labels() {
        let t = ContingencyTable::from_labels(
            &labels(&[("x", "A"), ("y", "A")]),
            &labels(&[("x", "0"), ("y", "0")]),
        )
        .unwrap();
        assert_eq!(t.counts, [[2]]);
        let t = ContingencyTable::from_labels(
            &labels(&[("x", "A"), ("y", "B"), ("z", "B")]),
            &labels(&[("x", "0"), ("y", "1"), ("w", "1")]),
        )
        .unwrap();
        assert_eq!(t.counts, [[1, 0], [0, 1]]);
        assert_eq!((t.unclustered, t.unlabeled), (1, 1));
    }

    #[test]
    fn no_overlap_is_error() {
        assert_eq!(
            ContingencyTable::from_labels(&labels(&[("x", "A")]), &labels(&[("y", "0")])),
            Err(MetricsError::NoOverlap)
        );
        assert_eq!(
            ContingencyTable::from_counts(vec![vec![0, 0]]),
            Err(MetricsError::Empty)
        );
    }

    #[test]
    fn diagonal_is_perfect() {
        let t = table(&[&[3, 0, 0], &[0, 2, 0], &[0, 0, 4]]);
        assert_eq!(homogeneity(&t), 1.0);
        assert_eq!(completeness(&t), 1.0);
        assert_eq!(v_measure(&t), 1.0);
        assert_eq!(paired_f_score(&t), (1.0, 1.0, 1.0));
    }

    #[test]
    fn perfectly_mixed_is_zero() {
        let t = table(&[&[1, 1], &[1, 1]]);
        assert_eq!(homogeneity(&t), 0.0);
        assert_eq!(completeness(&t), 0.0);
        assert_eq!(v_measure(&t), 0.0);
    }

    #[test]
    fn single_cluster_conventions() {
        let t = table(&[&[2], &[2]]);
        assert_eq!(homogeneity(&t), 0.0);
        assert_eq!(completeness(&t), 1.0);
        assert_eq!(v_measure(&t), 0.0);
        let (p, r, f) = paired_f_score(&t);
        assert_eq!(p, 2.0 / 6.0);
        assert_eq!(r, 1.0);
        assert_eq!(f, 0.5);
    }

    #[test]
    fn single_class_has_homogeneity_one() {
        let t = table(&[&[2, 3]]);
        assert_eq!(homogeneity(&t), 1.0);
        assert_eq!(completeness(&t), 0.0);
    }

    #[test]
    fn zero_pair_conventions() {
        // Every instance alone: no co-clustered and no co-classed pairs.
        let t = table(&[&[1, 0], &[0, 1]]);
        assert_eq!(paired_f_score(&t), (0.0, 0.0, 0.0));
        // Singleton clusters, one shared class: precision 0, recall 0.
        let t = table(&[&[1, 1]]);
        assert_eq!(paired_f_score(&t), (0.0, 0.0, 0.0));
        // One cluster of singleton classes: precision 0, recall 0 (no class pairs).
        let t = table(&[&[1], &[1]]);
        assert_eq!(paired_f_score(&t), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_evaluated_two_by_two() {
        // a = [[2,1],[0,1]], N = 4, entropies in bits.
        // H(GS) = -(3/4 log 3/4 + 1/4 log 1/4)
        // H(GS|C) = -(2/4 log 2/2 + 1/4 log 1/2 + 1/4 log 1/2) = 1/2
        // H(C) = 1, H(C|GS) = -(2/4 log 2/3 + 1/4 log 1/3 + 1/4 log 1/1)
        let t = table(&[&[2, 1], &[0, 1]]);
        let h_gs = -(0.75 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        let hom = 1.0 - 0.5 / h_gs;
        let h_c_gs = -(0.5 * (2.0f64 / 3.0).log2() + 0.25 * (1.0f64 / 3.0).log2());
        let comp = 1.0 - h_c_gs / 1.0;
        assert!((homogeneity(&t) - hom).abs() < 1e-12);
        assert!((completeness(&t) - comp).abs() < 1e-12);
        assert!((v_measure(&t) - 2.0 * hom * comp / (hom + comp)).abs() < 1e-12);
    }

    #[test]
    fn concat_is_block_diagonal() {
        let a = table(&[&[2, 0], &[0, 1]]);
        let b = table(&[&[1, 1]]);
        let c = ContingencyTable::concat([&a, &b]).unwrap();
        assert_eq!(
            c.counts,
            [vec![2, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 1]]
        );
        assert_eq!(c.total(), 5);
        assert_eq!(c.classes[2], "1:c0");
    }

    #[test]
    fn score_report_percent_and_mean() {
        let t = table(&[&[2], &[2]]);
        let r = ScoreReport::from_table(&t);
        assert_eq!(r.percent.f_score, 50.0);
        assert_eq!(r.instances, 4);
        let d = ScoreReport::from_table(&table(&[&[1, 0], &[0, 1]]));
        let m = ScoreReport::mean([&r, &d]).unwrap();
        assert_eq!(m.v_measure, 0.5);
        assert_eq!(m.instances, 6);
        assert!(ScoreReport::mean([]).is_none());
    }

    fn arb_table() -> impl Strategy<Value = ContingencyTable> {
        (1usize..6, 1usize..6)
            .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(0u64..20, c), r))
            .prop_filter("non-empty", |m| m.iter().flatten().sum::<u64>() > 0)
            .prop_map(|m| ContingencyTable::from_counts(m).unwrap())
    }

    proptest! {
        #[test]
        fn scores_in_unit_interval(t in arb_table()) {
            let r = ScoreReport::from_table(&t);
            for v in [r.homogeneity, r.completeness, r.v_measure, r.paired_precision, r.paired_recall, r.f_score] {
                prop_assert!((0.0..=1.0).contains(&v), "{v}");
            }
        }

        #[test]
        fn relabeling_invariant(t in arb_table(), rot_r in 0usize..6, rot_c in 0usize..6) {
            let mut counts = t.counts.clone();
            let rows = counts.len();
            counts.rotate_left(rot_r % rows);
            for row in &mut counts {
                let cols = row.len();
                row.rotate_left(rot_c % cols);
            }
            let p = ContingencyTable::from_counts(counts).unwrap();
            let (a, b) = (ScoreReport::from_table(&t), ScoreReport::from_table(&p));
            prop_assert!((a.v_measure - b.v_measure).abs() < 1e-12);
            prop_assert!((a.homogeneity - b.homogeneity).abs() < 1e-12);
            prop_assert_eq!(a.f_score, b.f_score);
        }

        #[test]
        fn base_invariant(t in arb_table()) {
            prop_assert!((v_measure_in(&t, LogBase::Two) - v_measure_in(&t, LogBase::E)).abs() < 1e-12);
        }
    }
}
