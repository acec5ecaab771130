//! Seeded random instances shared by the tests.

#![allow(dead_code)]

use probelab_core::rng::stream_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Clustering instance `(points, min_cluster_size, min_samples)`: a few
/// Gaussian blobs, or distinct integer points (which produce many tied
/// distances).
pub fn hdbscan_instance(seed: u64) -> (Vec<Vec<f64>>, usize, usize) {
    let mut rng = stream_rng(seed, 0);
    let n = rng.random_range(8..=50);
    let d = rng.random_range(1..=3);
    let mcs = rng.random_range(2..=6);
    let ms = rng.random_range(1..=mcs.min(n));
    let mut pts: Vec<Vec<f64>> = Vec::new();
    if seed.is_multiple_of(2) {
        let k = rng.random_range(1..=4);
        let centres: Vec<Vec<f64>> = (0..k)
            .map(|_| (0..d).map(|_| rng.random_range(-10.0..10.0)).collect())
            .collect();
        while pts.len() < n {
            let c = &centres[rng.random_range(0..k)];
            let spread = 0.3 + rng.random::<f64>();
            pts.push(c.iter().map(|m| m + spread * normal(&mut rng)).collect());
        }
    } else {
        let side = if d == 1 { 80 } else { 12 };
        while pts.len() < n {
            let p: Vec<f64> = (0..d).map(|_| rng.random_range(0..side) as f64).collect();
            if !pts.contains(&p) {
                pts.push(p);
            }
        }
    }
    (pts, mcs, ms)
}

/// 200 points: unit Gaussian blobs centred at the origin and at 10 e1
/// (rows 0..100 and 100..200).
pub fn two_blobs(seed: u64) -> Vec<[f64; 2]> {
    let mut rng = stream_rng(seed, 0);
    (0..200)
        .map(|i| {
            let cx = if i < 100 { 0.0 } else { 10.0 };
            [cx + normal(&mut rng), normal(&mut rng)]
        })
        .collect()
}

/// `(w, b, pos, neg)`.
pub type CcsInstance = (Vec<f64>, f64, Vec<Vec<f64>>, Vec<Vec<f64>>);

/// CCS instance `(w, b, pos, neg)` with n <= 8 and d <= 5, kept away from
/// the `min(a, c)` kink, where the loss is not differentiable.
pub fn ccs_instance(seed: u64) -> CcsInstance {
    let mut rng = stream_rng(seed, 9);
    loop {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=5);
        let mut row = || -> Vec<f64> { (0..d).map(|_| rng.random_range(-2.0..2.0)).collect() };
        let pos: Vec<Vec<f64>> = (0..n).map(|_| row()).collect();
        let neg: Vec<Vec<f64>> = (0..n).map(|_| row()).collect();
        let w = row();
        let b = rng.random_range(-1.0..1.0);
        let z = |x: &[f64]| x.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
        if pos
            .iter()
            .zip(&neg)
            .all(|(p, q)| (z(p) - z(q)).abs() > 1e-3)
        {
            return (w, b, pos, neg);
        }
    }
}

/// Rows with anisotropic per-column scales, which keep the top eigenvalue
/// well separated on average.
pub fn anisotropic_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 3);
    let scales: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..3.0)).collect();
    (0..n)
        .map(|_| {
            scales
                .iter()
                .map(|s| s * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect()
}

/// Uniform rows in `[-1, 1)`.
pub fn uniform_rows(seed: u64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(seed, 5);
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect()
}
