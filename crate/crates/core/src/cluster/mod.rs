//! Clustering of pair averages: HDBSCAN (default) and seeded k-means.

mod hdbscan;
mod kmeans;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::ContrastPairSet;
use crate::error::Result;
use crate::linalg::Matrix;
use crate::norm::pair_average;

pub use hdbscan::{hdbscan, HdbscanParams, Selection};
pub use kmeans::{kmeans, kmeans_fit, kmeans_sse, KMeansFit, KMeansParams};

/// Label of points that belong to no cluster.
pub const NOISE: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClusterParams {
    Hdbscan(HdbscanParams),
    Kmeans(KMeansParams),
    /// Assignment supplied from outside (ground truth or a file).
    Oracle,
}

/// Which algorithm [`cluster_pair_averages`] runs.
pub type ClusterMethod = ClusterParams;

impl Default for ClusterParams {
    fn default() -> Self {
        Self::Hdbscan(HdbscanParams::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Per-point cluster id; `-1` is noise, clusters are numbered from 0.
    pub labels: Vec<i64>,
    /// Number of clusters (noise excluded).
    pub k: usize,
    pub params: ClusterParams,
    pub metric: Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Euclidean,
}

impl ClusterAssignment {
    /// Wraps arbitrary labels, renumbering clusters to `0..k` in order of
    /// their lowest member index. Negative labels become noise.
    pub fn from_labels(labels: Vec<i64>, params: ClusterParams) -> Self {
        let mut map = BTreeMap::new();
        let mut out = Vec::with_capacity(labels.len());
        for &l in &labels {
            if l < 0 {
                out.push(NOISE);
                continue;
            }
            let next = map.len() as i64;
            out.push(*map.entry(l).or_insert(next));
        }
        Self {
            labels: out,
            k: map.len(),
            params,
            metric: Metric::Euclidean,
        }
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l == NOISE).count()
    }

    /// Member count per cluster id `0..k`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.k];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }
}

/// Clusters `points` with the chosen method.
pub fn cluster_points(points: &Matrix, method: &ClusterParams) -> Result<ClusterAssignment> {
    match method {
        ClusterParams::Hdbscan(p) => hdbscan(points, p),
        ClusterParams::Kmeans(p) => kmeans(points, p),
        ClusterParams::Oracle => Err(crate::error::Error::Config(
            "an oracle assignment cannot be computed from points".into(),
        )),
    }
}

/// Clusters the pair averages `(pos_i + neg_i) / 2` of a dataset.
pub fn cluster_pair_averages(
    set: &ContrastPairSet,
    method: &ClusterParams,
) -> Result<ClusterAssignment> {
    cluster_points(&pair_average(set), method)
}

/// Adjusted Rand index between two labelings (noise treated as its own label).
pub fn adjusted_rand_index(a: &[i64], b: &[i64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut table: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    let mut ra: BTreeMap<i64, u64> = BTreeMap::new();
    let mut rb: BTreeMap<i64, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let c2 = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sa: f64 = ra.values().map(|&v| c2(v)).sum();
    let sb: f64 = rb.values().map(|&v| c2(v)).sum();
    let total = c2(a.len() as u64);
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn from_labels_renumbers_by_first_member() {
        let a = ClusterAssignment::from_labels(vec![5, -3, 2, 5, 2], ClusterParams::Oracle);
        assert_eq!(a.labels, vec![0, -1, 1, 0, 1]);
        assert_eq!(a.k, 2);
        assert_eq!(a.sizes(), vec![2, 2]);
        assert_eq!(a.noise_count(), 1);
    }

    #[test]
    fn ari_is_one_up_to_relabeling() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
    }
}
