//! Seeded k-means: k-means++ initialization followed by Lloyd iterations.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{ClusterAssignment, ClusterParams};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::stream_rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

fn default_max_iters() -> usize {
    300
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iters: default_max_iters(),
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &Matrix) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = sq_dist(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus(points: &Matrix, k: usize, seed: u64) -> Matrix {
    let n = points.rows();
    let mut rng = stream_rng(seed, 0);
    let mut centroids = Matrix::zeros(k, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| sq_dist(points.row(i), centroids.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && *w > 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

/// Sum of squared distances from each point to its centroid.
pub fn kmeans_sse(points: &Matrix, labels: &[i64], centroids: &Matrix) -> f64 {
    (0..points.rows())
        .map(|i| sq_dist(points.row(i), centroids.row(labels[i] as usize)))
        .sum()
}

fn update_centroids(points: &Matrix, labels: &[usize], k: usize) -> (Matrix, Vec<usize>) {
    let mut centroids = Matrix::zeros(k, points.cols());
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        for (c, x) in centroids.row_mut(l).iter_mut().zip(points.row(i)) {
            *c += x;
        }
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            centroids
                .row_mut(c)
                .iter_mut()
                .for_each(|v| *v /= count as f64);
        }
    }
    (centroids, counts)
}

/// Result of a k-means run, including centroids and the SSE after every
/// Lloyd iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub assignment: ClusterAssignment,
    pub centroids: Matrix,
    pub sse_history: Vec<f64>,
}

pub fn kmeans(points: &Matrix, params: &KMeansParams) -> Result<ClusterAssignment> {
    kmeans_fit(points, params).map(|f| f.assignment)
}

pub fn kmeans_fit(points: &Matrix, params: &KMeansParams) -> Result<KMeansFit> {
    let n = points.rows();
    let k = params.k;
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    if let Some((row, col)) = points.first_non_finite() {
        return Err(Error::NonFinite {
            what: "points",
            row,
            col,
        });
    }
    let mut centroids = plus_plus(points, k, params.seed);
    let mut labels: Vec<usize> = (0..n)
        .map(|i| nearest(points.row(i), &centroids).0)
        .collect();
    let mut sse_history = Vec::new();
    for _ in 0..params.max_iters {
        let (mut next, counts) = update_centroids(points, &labels, k);
        // Empty clusters take the point farthest from its centroid.
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = (0..n)
                .max_by(|&a, &b| {
                    let da = sq_dist(points.row(a), next.row(labels[a]));
                    let db = sq_dist(points.row(b), next.row(labels[b]));
                    da.total_cmp(&db).then(b.cmp(&a))
                })
                .unwrap_or(0);
            labels[far] = c;
            next.row_mut(c).copy_from_slice(points.row(far));
        }
        centroids = next;
        let new_labels: Vec<usize> = (0..n)
            .map(|i| nearest(points.row(i), &centroids).0)
            .collect();
        let sse: f64 = (0..n)
            .map(|i| sq_dist(points.row(i), centroids.row(new_labels[i])))
            .sum();
        sse_history.push(sse);
        if new_labels == labels {
            break;
        }
        labels = new_labels;
    }
    let (raw, _) = update_centroids(points, &labels, k);
    let assignment = ClusterAssignment::from_labels(
        labels.iter().map(|&l| l as i64).collect(),
        ClusterParams::Kmeans(params.clone()),
    );
    // Reorder centroids to follow the renumbered labels.
    let mut centroids = Matrix::zeros(k, points.cols());
    let mut placed = vec![false; k];
    for (&old, &new) in labels.iter().zip(&assignment.labels) {
        let new = new as usize;
        if !placed[new] {
            placed[new] = true;
            centroids.row_mut(new).copy_from_slice(raw.row(old));
        }
    }
    Ok(KMeansFit {
        assignment,
        centroids,
        sse_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> Matrix {
        Matrix::from_vec(xs.len(), 1, xs.to_vec()).unwrap()
    }

    #[test]
    fn separates_two_pairs_on_a_line() {
        let a = kmeans(&line(&[0.0, 0.1, 10.0, 10.1]), &KMeansParams::new(2, 1)).unwrap();
        assert_eq!(a.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn single_cluster_centroid_is_the_mean() {
        let pts = line(&[1.0, 2.0, 6.0]);
        let fit = kmeans_fit(&pts, &KMeansParams::new(1, 9)).unwrap();
        assert_eq!(fit.assignment.labels, vec![0, 0, 0]);
        assert_eq!(fit.centroids.row(0), &[3.0]);
    }

    #[test]
    fn centroids_follow_label_numbering() {
        let pts = line(&[10.0, 0.0, 10.2, 0.2]);
        for seed in 0..8 {
            let fit = kmeans_fit(&pts, &KMeansParams::new(2, seed)).unwrap();
            assert_eq!(fit.assignment.labels, vec![0, 1, 0, 1]);
            assert!((fit.centroids.get(0, 0) - 10.1).abs() < 1e-12);
            assert!((fit.centroids.get(1, 0) - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn k_larger_than_n_is_an_error() {
        assert!(matches!(
            kmeans(&line(&[1.0, 2.0]), &KMeansParams::new(3, 0)),
            Err(Error::TooManyClusters { k: 3, n: 2 })
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let xs: Vec<f64> = (0..30).map(|i| ((i * 7919) % 101) as f64).collect();
        let a = kmeans(&line(&xs), &KMeansParams::new(4, 5)).unwrap();
        let b = kmeans(&line(&xs), &KMeansParams::new(4, 5)).unwrap();
        assert_eq!(a, b);
    }
}
