//! Cosine geometry over embeddings and spherical K-means.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum VectorError {
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cannot form {k} clusters from {n} vectors")]
    TooFewVectors { k: usize, n: usize },
    #[error("cluster has no members")]
    EmptyCluster,
}

pub type Result<T, E = VectorError> = std::result::Result<T, E>;

/// A dense embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector<T = f64>(pub Vec<T>);

impl<T: Scalar> EmbeddingVector<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn values(&self) -> &[T] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> T {
        self.0.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a * b).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Converts to another precision.
    pub fn cast<U: Scalar>(&self) -> EmbeddingVector<U> {
        EmbeddingVector(
            self.0
                .iter()
                .map(|x| U::of(x.to_f64().unwrap_or(0.0)))
                .collect(),
        )
    }
}

impl<T> From<Vec<T>> for EmbeddingVector<T> {
    fn from(values: Vec<T>) -> Self {
        Self(values)
    }
}

/// Scales `v` to unit length.
pub fn normalize<T: Scalar>(v: &EmbeddingVector<T>) -> Result<EmbeddingVector<T>> {
    let norm = v.norm();
    if norm == T::zero() || !norm.is_finite() {
        return Err(VectorError::ZeroVector);
    }
    Ok(EmbeddingVector(v.0.iter().map(|&x| x / norm).collect()))
}

pub fn cosine_similarity<T: Scalar>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> Result<T> {
    if a.dim() != b.dim() {
        return Err(VectorError::DimensionMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == T::zero() || nb == T::zero() {
        return Err(VectorError::ZeroVector);
    }
    let sim = a.dot(b) / (na * nb);
    Ok(sim.max(-T::one()).min(T::one()))
}

/// Result of a K-means run. `labels[i]` is the cluster of input vector `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment<T = f64> {
    pub labels: Vec<usize>,
    pub centroids: Vec<EmbeddingVector<T>>,
    pub k: usize,
    pub seed: u64,
    pub iterations_run: usize,
    /// Sum of member-to-centroid cosine similarities after each iteration.
    pub objective_history: Vec<T>,
}

impl<T: Scalar> ClusterAssignment<T> {
    /// Input indices assigned to `cluster`, ascending.
    pub fn members(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn objective(&self) -> T {
        self.objective_history.last().copied().unwrap_or_else(T::zero)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this (Euclidean) and labels are stable.
    pub tolerance: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tolerance: 1e-6,
        }
    }
}

/// Spherical K-means with k-means++ seeding.
pub fn kmeans<T: Scalar>(
    vectors: &[EmbeddingVector<T>],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<ClusterAssignment<T>> {
    kmeans_with(
        vectors,
        k,
        seed,
        &KMeansOptions {
            max_iter,
            ..Default::default()
        },
    )
}

/// Spherical K-means maximizing the summed cosine similarity of each vector
/// to its centroid.
///
/// Inputs are normalized and put into a canonical (lexicographic) order before
/// seeding, so the partition does not depend on input order.
pub fn kmeans_with<T: Scalar>(
    vectors: &[EmbeddingVector<T>],
    k: usize,
    seed: u64,
    options: &KMeansOptions,
) -> Result<ClusterAssignment<T>> {
    let n = vectors.len();
    if k == 0 || n < k {
        return Err(VectorError::TooFewVectors { k, n });
    }
    let dim = vectors[0].dim();
    for v in vectors {
        if v.dim() != dim {
            return Err(VectorError::DimensionMismatch(dim, v.dim()));
        }
    }
    let unit: Vec<EmbeddingVector<T>> = vectors.iter().map(normalize).collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lexicographic(&unit[a], &unit[b]).then(a.cmp(&b)));
    let points: Vec<&EmbeddingVector<T>> = order.iter().map(|&i| &unit[i]).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_plus_plus(&points, k, &mut rng);
    let mut labels = assign(&points, &centroids);
    let mut history = Vec::new();
    let tolerance = T::of(options.tolerance);
    let mut iterations_run = 0;

    for _ in 0..options.max_iter.max(1) {
        iterations_run += 1;
        repair_empty(&points, &mut labels, &mut centroids);
        let updated = update_centroids(&points, &labels, &centroids);
        let shift = centroids
            .iter()
            .zip(&updated)
            .map(|(a, b)| euclidean(a, b))
            .fold(T::zero(), T::max);
        centroids = updated;
        let next = assign(&points, &centroids);
        let stable = next == labels;
        labels = next;
        history.push(objective(&points, &labels, &centroids));
        if stable && shift <= tolerance {
            break;
        }
    }
    // A final assignment may have emptied a cluster; keep every label in use.
    if labels_have_empty(&labels, k) {
        repair_empty(&points, &mut labels, &mut centroids);
        centroids = update_centroids(&points, &labels, &centroids);
        history.push(objective(&points, &labels, &centroids));
    }

    let mut original_labels = vec![0; n];
    for (pos, &orig) in order.iter().enumerate() {
        original_labels[orig] = labels[pos];
    }
    Ok(ClusterAssignment {
        labels: original_labels,
        centroids,
        k,
        seed,
        iterations_run,
        objective_history: history,
    })
}

fn lexicographic<T: Scalar>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> Ordering {
    for (x, y) in a.0.iter().zip(&b.0) {
        let ord = x.partial_cmp(y).unwrap_or(Ordering::Equal);
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

fn euclidean<T: Scalar>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> T {
    a.0.iter()
        .zip(&b.0)
        .map(|(&x, &y)| (x - y) * (x - y))
        .sum::<T>()
        .sqrt()
}

fn seed_plus_plus<T: Scalar>(
    points: &[&EmbeddingVector<T>],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<EmbeddingVector<T>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    // Distance of each point to its nearest chosen centroid: 1 - cosine.
    let mut dist: Vec<f64> = points
        .iter()
        .map(|p| cosine_distance(p, points[first]))
        .collect();
    while centroids.len() < k {
        let weights: Vec<f64> = dist
            .iter()
            .zip(&chosen)
            .map(|(&d, &c)| if c { 0.0 } else { d * d })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    pick = Some(i);
                    if target < w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total weight")
        } else {
            // Only duplicates of existing centroids remain.
            chosen.iter().position(|&c| !c).expect("n >= k")
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(cosine_distance(p, points[pick]));
        }
    }
    centroids
}

fn cosine_distance<T: Scalar>(a: &EmbeddingVector<T>, b: &EmbeddingVector<T>) -> f64 {
    (1.0 - a.dot(b).to_f64().unwrap_or(0.0)).max(0.0)
}

fn assign<T: Scalar>(points: &[&EmbeddingVector<T>], centroids: &[EmbeddingVector<T>]) -> Vec<usize> {
    points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_sim = T::neg_infinity();
            for (j, c) in centroids.iter().enumerate() {
                let sim = p.dot(c);
                if sim > best_sim {
                    best = j;
                    best_sim = sim;
                }
            }
            best
        })
        .collect()
}

fn labels_have_empty(labels: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    seen.iter().any(|s| !s)
}

/// Moves the globally worst-fit point into each empty cluster.
fn repair_empty<T: Scalar>(
    points: &[&EmbeddingVector<T>],
    labels: &mut [usize],
    centroids: &mut [EmbeddingVector<T>],
) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let worst = (0..points.len())
            .filter(|&i| sizes[labels[i]] > 1)
            .min_by(|&a, &b| {
                let sa = points[a].dot(&centroids[labels[a]]);
                let sb = points[b].dot(&centroids[labels[b]]);
                sa.partial_cmp(&sb).unwrap_or(Ordering::Equal).then(a.cmp(&b))
            })
            .expect("n >= k guarantees a donor cluster");
        labels[worst] = empty;
        centroids[empty] = points[worst].clone();
    }
}

fn update_centroids<T: Scalar>(
    points: &[&EmbeddingVector<T>],
    labels: &[usize],
    previous: &[EmbeddingVector<T>],
) -> Vec<EmbeddingVector<T>> {
    let dim = points[0].dim();
    let mut sums = vec![vec![T::zero(); dim]; previous.len()];
    for (p, &l) in points.iter().zip(labels) {
        for (s, &x) in sums[l].iter_mut().zip(p.values()) {
            *s = *s + x;
        }
    }
    sums.into_iter()
        .zip(previous)
        .map(|(sum, prev)| normalize(&EmbeddingVector(sum)).unwrap_or_else(|_| prev.clone()))
        .collect()
}

fn objective<T: Scalar>(
    points: &[&EmbeddingVector<T>],
    labels: &[usize],
    centroids: &[EmbeddingVector<T>],
) -> T {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| p.dot(&centroids[l]))
        .sum()
}

/// Ids of the `m` members most similar to `centroid`, most similar first.
/// Ties go to the lexicographically smaller id.
pub fn top_representatives<T: Scalar>(
    members: &[(String, EmbeddingVector<T>)],
    centroid: &EmbeddingVector<T>,
    m: usize,
) -> Result<Vec<String>> {
    if members.is_empty() {
        return Err(VectorError::EmptyCluster);
    }
    let mut scored: Vec<(T, &str)> = members
        .iter()
        .map(|(id, v)| cosine_similarity(v, centroid).map(|s| (s, id.as_str())))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    Ok(scored
        .into_iter()
        .take(m)
        .map(|(_, id)| id.to_string())
        .collect())
}
