mod fixtures;
mod oracle;

use probelab_core::probes::{crc_predict, crc_tpc, pca_top_k, top_principal_component};
use probelab_core::rng::stream_rng;
use probelab_core::Matrix;
use rand::Rng;

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn top_component_matches_closed_form() {
    for seed in 0..60 {
        let d = 1 + (seed as usize % 3);
        let n = 5 + (seed as usize % 17);
        let rows = fixtures::anisotropic_rows(seed, n, d);
        let (lambda, v) = oracle::top_eigen(&oracle::covariance(&rows));
        let p = top_principal_component(&Matrix::from_rows(&rows).unwrap()).unwrap();
        let c = cosine(&p.u, &v).abs();
        assert!(c >= 1.0 - 1e-8, "seed {seed}: |cos| = {c}");
        assert!((p.eigenvalue - lambda).abs() <= 1e-9 * lambda.max(1.0));
    }
}

#[test]
fn diagonal_covariance() {
    // Covariance diag(9, 4, 1): rows +-3 e1, +-2 e2, +-1 e3.
    let x = Matrix::from_rows(&[
        [3.0, 0.0, 0.0],
        [-3.0, 0.0, 0.0],
        [0.0, 2.0, 0.0],
        [0.0, -2.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ])
    .unwrap();
    let pca = pca_top_k(&x, 3).unwrap();
    for (i, (u, lambda)) in pca.components.iter().zip(&pca.eigenvalues).enumerate() {
        assert!((u[i] - 1.0).abs() < 1e-12, "component {i}: {u:?}");
        assert!((lambda - [3.0, 4.0 / 3.0, 1.0 / 3.0][i]).abs() < 1e-12);
    }
}

#[test]
fn deflated_components_are_orthonormal() {
    for seed in 0..20 {
        let rows = fixtures::anisotropic_rows(100 + seed, 30, 5);
        let pca = pca_top_k(&Matrix::from_rows(&rows).unwrap(), 3).unwrap();
        assert_eq!(pca.components.len(), 3);
        for a in 0..3 {
            let na: f64 = pca.components[a].iter().map(|x| x * x).sum();
            assert!((na - 1.0).abs() <= 1e-9);
            for b in a + 1..3 {
                let dot: f64 = pca.components[a]
                    .iter()
                    .zip(&pca.components[b])
                    .map(|(x, y)| x * y)
                    .sum();
                assert!(dot.abs() <= 1e-8, "seed {seed}: <u{a}, u{b}> = {dot}");
            }
        }
        assert!(pca.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn projection_variance_bounded_by_total() {
    let rows = fixtures::anisotropic_rows(7, 40, 4);
    let x = Matrix::from_rows(&rows).unwrap();
    let partial = pca_top_k(&x, 2).unwrap();
    let full = pca_top_k(&x, 4).unwrap();
    let var = |p: &probelab_core::probes::Pca| -> f64 {
        (0..p.projections.cols())
            .map(|c| {
                (0..40)
                    .map(|i| p.projections.get(i, c).powi(2))
                    .sum::<f64>()
                    / 40.0
            })
            .sum()
    };
    assert!(var(&partial) <= partial.total_variance);
    assert!((var(&full) - full.total_variance).abs() <= 1e-9 * full.total_variance);
}

#[test]
fn crc_recovers_knowledge_only_labels() {
    let mut rng = stream_rng(5, 0);
    let dir = [0.6, -0.8, 0.0];
    let labels: Vec<u8> = (0..50).map(|i| (i % 2) as u8).collect();
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|&l| {
            let s = if l == 1 { 1.0 } else { -1.0 };
            dir.iter()
                .map(|v| s * v + 0.01 * rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    let diffs = Matrix::from_rows(&rows).unwrap();
    let probe = crc_tpc(&diffs).unwrap();
    let pred = crc_predict(&probe, &diffs).unwrap();
    let agree = pred.iter().zip(&labels).filter(|(a, b)| a == b).count();
    assert!(agree == 50 || agree == 0);
}
