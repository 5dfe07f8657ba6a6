//! Spherical K-means: K-means on the unit sphere under cosine similarity.
//!
//! Points are normalized to unit length, each centroid is the renormalized
//! mean direction of its members, and the objective is
//! `Σ (1 − cos(point, centroid))`. Alternating assignment and centroid
//! updates never increase the objective.
//!
//! Points are processed in instance-id order and every random stream is keyed
//! by the sorted ids, so permuting the input changes nothing in the result.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("zero-norm vector{}", .0.as_ref().map(|id| format!(" for `{id}`")).unwrap_or_default())]
    ZeroNorm(Option<String>),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
    #[error("invalid cluster configuration: {0}")]
    Config(String),
    #[error("duplicate point id `{0}`")]
    DuplicateId(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    /// Number of clusters C.
    pub clusters: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub restarts: usize,
}

impl ClusterConfig {
    pub fn new(clusters: usize) -> Self {
        ClusterConfig {
            clusters,
            max_iters: 100,
            seed: 1,
            restarts: 10,
        }
    }

    pub fn validate(&self) -> Result<(), ClusterError> {
        if self.clusters == 0 {
            return Err(ClusterError::Config(
                "cluster count must be at least 1".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(ClusterError::Config("max_iters must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(ClusterError::Config("restarts must be at least 1".into()));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, ClusterError> {
    if a.len() != b.len() {
        return Err(ClusterError::Dimension(a.len(), b.len()));
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(ClusterError::ZeroNorm(None));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// Result of a clustering run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    /// `(instance_id, cluster)` in the caller's input order.
    pub assignments: Vec<(String, usize)>,
    /// Unit-norm centroid per cluster.
    pub centroids: Vec<Vec<f64>>,
    /// Σ over points of `1 − cos(point, assigned centroid)`.
    pub objective: f64,
    /// Lloyd iterations used by the winning restart.
    pub iterations: usize,
}

impl Clustering {
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    pub fn cluster_of(&self, id: &str) -> Option<usize> {
        self.assignments
            .iter()
            .find(|(pid, _)| pid == id)
            .map(|&(_, c)| c)
    }

    pub fn as_map(&self) -> BTreeMap<String, usize> {
        self.assignments.iter().cloned().collect()
    }

    /// Member count of each cluster.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.centroids.len()];
        for &(_, c) in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }
}

/// Per-restart objective after every centroid update.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KmeansTrace {
    pub restarts: Vec<Vec<f64>>,
}

/// Index of the most similar centroid; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, dot(point, &centroids[0]));
    for (c, centroid) in centroids.iter().enumerate().skip(1) {
        let sim = dot(point, centroid);
        if sim > best.1 {
            best = (c, sim);
        }
    }
    best
}

fn objective(points: &[Vec<f64>], assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    points
        .iter()
        .zip(assignment)
        .map(|(p, &c)| 1.0 - dot(p, &centroids[c]))
        .sum()
}

/// Mean direction of each cluster. Clusters without members keep their
/// previous centroid.
fn update_centroids(points: &[Vec<f64>], assignment: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    for (p, &c) in points.iter().zip(assignment) {
        for (s, x) in sums[c].iter_mut().zip(p) {
            *s += x;
        }
    }
    for (centroid, sum) in centroids.iter_mut().zip(sums) {
        let n = norm(&sum);
        if n > 0.0 {
            *centroid = sum.into_iter().map(|x| x / n).collect();
        }
    }
}

/// k-means++ seeding with `1 − cos` as the distance.
fn seed_centroids(points: &[Vec<f64>], clusters: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| (1.0 - dot(p, &points[first])).max(0.0))
        .collect();
    while centroids.len() < clusters {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| dist[i]).sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i]) {
                if u < dist[i] {
                    pick = Some(i);
                    break;
                }
                u -= dist[i];
            }
            pick.unwrap_or_else(|| (0..n).rev().find(|&i| !chosen[i]).unwrap())
        } else {
            // Every remaining point coincides with a chosen one.
            let remaining: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        chosen[pick] = true;
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min((1.0 - dot(p, &points[pick])).max(0.0));
        }
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Gives every empty cluster a member: the point least similar to its own
/// centroid among clusters that can spare one. The emptied cluster's
/// centroid becomes that point.
fn repair_empty(points: &[Vec<f64>], assignment: &mut [usize], centroids: &mut [Vec<f64>]) {
    loop {
        let mut sizes = vec![0usize; centroids.len()];
        for &c in assignment.iter() {
            sizes[c] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let mut worst: Option<(usize, f64)> = None;
        for (i, (p, &c)) in points.iter().zip(assignment.iter()).enumerate() {
            if sizes[c] < 2 {
                continue;
            }
            let sim = dot(p, &centroids[c]);
            if worst.is_none_or(|(_, s)| sim < s) {
                worst = Some((i, sim));
            }
        }
        let (i, _) = worst.expect("clusters <= points leaves a donor");
        assignment[i] = empty;
        centroids[empty] = points[i].clone();
    }
}

struct RestartResult {
    assignment: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    objective: f64,
    iterations: usize,
    history: Vec<f64>,
}

fn lloyd(points: &[Vec<f64>], config: &ClusterConfig, rng: &mut ChaCha8Rng) -> RestartResult {
    let mut centroids = seed_centroids(points, config.clusters, rng);
    let mut assignment: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    repair_empty(points, &mut assignment, &mut centroids);

    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        update_centroids(points, &assignment, &mut centroids);
        history.push(objective(points, &assignment, &centroids));
        iterations += 1;

        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignment {
            break;
        }
        let previous = std::mem::replace(&mut assignment, next);
        let previous_centroids = centroids.clone();
        if iterations >= config.max_iters {
            // Out of budget: keep the assignment that is optimal for the
            // current centroids, even if it leaves a cluster empty.
            history.push(objective(points, &assignment, &centroids));
            break;
        }
        let unrepaired = assignment.clone();
        repair_empty(points, &mut assignment, &mut centroids);
        if assignment == previous {
            // Coincident points: repair would only undo the tie-break, so
            // keep the tie-consistent assignment with an empty cluster.
            assignment = unrepaired;
            centroids = previous_centroids;
            history.push(objective(points, &assignment, &centroids));
            break;
        }
    }
    RestartResult {
        objective: objective(points, &assignment, &centroids),
        assignment,
        centroids,
        iterations,
        history,
    }
}

/// Clusters topic distributions by cosine similarity.
pub fn kmeans_cosine<S: AsRef<str>, V: AsRef<[f64]>>(
    points: &[(S, V)],
    config: &ClusterConfig,
) -> Result<Clustering, ClusterError> {
    kmeans_cosine_traced(points, config).map(|(c, _)| c)
}

/// As [`kmeans_cosine`], also returning the objective history of every restart.
pub fn kmeans_cosine_traced<S: AsRef<str>, V: AsRef<[f64]>>(
    points: &[(S, V)],
    config: &ClusterConfig,
) -> Result<(Clustering, KmeansTrace), ClusterError> {
    config.validate()?;
    if points.is_empty() {
        return Err(ClusterError::Config("no points to cluster".into()));
    }
    if config.clusters > points.len() {
        return Err(ClusterError::Config(format!(
            "{} clusters requested for {} points",
            config.clusters,
            points.len()
        )));
    }
    let dim = points[0].1.as_ref().len();

    // Canonical order: sorted by id.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].0.as_ref().cmp(points[b].0.as_ref()));
    for pair in order.windows(2) {
        if points[pair[0]].0.as_ref() == points[pair[1]].0.as_ref() {
            return Err(ClusterError::DuplicateId(
                points[pair[0]].0.as_ref().to_string(),
            ));
        }
    }
    let mut unit = Vec::with_capacity(points.len());
    for &i in &order {
        let (id, v) = (points[i].0.as_ref(), points[i].1.as_ref());
        if v.len() != dim {
            return Err(ClusterError::Dimension(dim, v.len()));
        }
        let n = norm(v);
        if n == 0.0 || !n.is_finite() {
            return Err(ClusterError::ZeroNorm(Some(id.to_string())));
        }
        unit.push(v.iter().map(|x| x / n).collect::<Vec<f64>>());
    }

    let id_key = order
        .iter()
        .map(|&i| points[i].0.as_ref())
        .collect::<Vec<_>>()
        .join("\u{1f}");
    let base = seed::derive(config.seed, &id_key);

    let mut trace = KmeansTrace::default();
    let mut best: Option<RestartResult> = None;
    for restart in 0..config.restarts {
        let mut rng = seed::stream(base, &format!("kmeans-restart:{restart}"));
        let run = lloyd(&unit, config, &mut rng);
        trace.restarts.push(run.history.clone());
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");

    let mut assignments = vec![(String::new(), 0); points.len()];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = (points[i].0.as_ref().to_string(), best.assignment[pos]);
    }
    Ok((
        Clustering {
            assignments,
            centroids: best.centroids,
            objective: best.objective,
            iterations: best.iterations,
        },
        trace,
    ))
}
