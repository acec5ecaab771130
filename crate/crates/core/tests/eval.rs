use probelab_core::eval::{
    run_experiment, run_fit, split_indices, DataSource, NormMethod, ProbeName, Summary,
};
use probelab_core::synth::{generate_synthetic, Coefficients};
use probelab_core::{ClusterParams, ContrastPairSet, ExperimentConfig, Matrix, SynthConfig};
use proptest::prelude::*;

fn synth(c_distract: f64, c_xor_pm: f64) -> SynthConfig {
    SynthConfig {
        n: 300,
        d: 32,
        m: 2,
        coefficients: Coefficients {
            c_pm: 1.0,
            c_know: 1.0,
            c_distract,
            c_xor_pm,
            c_xor_know: 0.0,
        },
        noise_sigma: 0.05,
        balanced: true,
        seed: 4,
    }
}

fn quick(cfg: SynthConfig, norm: NormMethod, fits: usize) -> (ExperimentConfig, ContrastPairSet) {
    let data = generate_synthetic(&cfg).unwrap().set;
    let mut e = ExperimentConfig::new(DataSource::Synthetic(cfg), norm, 21);
    e.fits = fits;
    e.ccs.restarts = 3;
    e.ccs.steps = 200;
    (e, data)
}

proptest! {
    #[test]
    fn split_is_a_seeded_partition(n in 2usize..400, ratio in 0.05f64..0.95, seed in any::<u64>()) {
        match split_indices(n, ratio, seed) {
            Ok((train, test)) => {
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
                prop_assert_eq!(train.len(), (ratio * n as f64 - 1e-9).ceil() as usize);
                prop_assert!(train.windows(2).all(|w| w[0] < w[1]));
                prop_assert_eq!(split_indices(n, ratio, seed).unwrap(), (train, test));
            }
            Err(_) => {
                let t = (ratio * n as f64 - 1e-9).ceil() as usize;
                prop_assert!(t == 0 || t >= n);
            }
        }
    }

    #[test]
    fn summary_brackets_its_values(v in prop::collection::vec(0.0f64..1.0, 1..60)) {
        let s = Summary::of(&v).unwrap();
        prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
        prop_assert!(s.min <= s.mean && s.mean <= s.max);
        prop_assert_eq!(s.count, v.len());
    }
}

#[test]
fn experiments_are_deterministic() {
    let (cfg, data) = quick(synth(5.0, 4.0), NormMethod::Cluster, 3);
    let a = run_experiment(&cfg, &data).unwrap();
    let b = run_experiment(&cfg, &data).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(run_experiment(&other, &data).unwrap().methods, a.methods);
}

#[test]
fn one_record_per_fit_and_method() {
    let (mut cfg, data) = quick(synth(5.0, 4.0), NormMethod::Burns, 50);
    cfg.probes = vec![ProbeName::CrcTpc, ProbeName::Logreg];
    let r = run_experiment(&cfg, &data).unwrap();
    assert_eq!(r.methods.len(), 2);
    for m in &r.methods {
        assert_eq!(m.fits.len(), 50);
        assert_eq!(m.failures, 0);
        for (i, f) in m.fits.iter().enumerate() {
            assert_eq!(f.fit, i);
            let acc = f.accuracy.unwrap();
            let raw = f.raw_accuracy.unwrap();
            assert!(acc >= 0.5);
            assert_eq!(acc, raw.max(1.0 - raw));
            assert_eq!(f.flipped, raw < 0.5);
        }
    }
    assert!(r.clusters.is_empty());
}

#[test]
fn test_rows_do_not_reach_training() {
    let (cfg, data) = quick(synth(5.0, 4.0), NormMethod::Cluster, 2);
    for fit in 0..cfg.fits {
        let (train, test) = split_indices(data.n(), cfg.split_ratio, cfg.split_seed(fit)).unwrap();
        let perturb = |rows: &[usize]| {
            let mut pos = data.pos().clone();
            for &i in rows {
                pos.row_mut(i).iter_mut().for_each(|x| *x = -7.0 * *x + 3.0);
            }
            data.with_activations(pos, data.neg().clone()).unwrap()
        };
        let (base, base_clusters) = run_fit(&cfg, &data, fit);
        let (records, clusters) = run_fit(&cfg, &perturb(&test), fit);
        assert_eq!(clusters, base_clusters);
        for (a, b) in records.iter().zip(&base) {
            assert_eq!(a.final_loss, b.final_loss);
        }
        let (records, _) = run_fit(&cfg, &perturb(&train[..1]), fit);
        assert!(records
            .iter()
            .zip(&base)
            .any(|(a, b)| a.final_loss != b.final_loss));
    }
}

#[test]
fn oracle_clusters_remove_the_distractor() {
    let (mut cfg, data) = quick(synth(5.0, 4.0), NormMethod::Cluster, 5);
    cfg.cluster = ClusterParams::Oracle;
    let r = run_experiment(&cfg, &data).unwrap();
    for p in ProbeName::ALL {
        assert!(r.mean_accuracy(p).unwrap() >= 0.95, "{p:?}");
    }
    assert!(r.clusters.iter().all(|c| c.k == 2 && c.noise == 0));
}

#[test]
fn without_distractors_every_method_succeeds() {
    for norm in [NormMethod::Burns, NormMethod::Cluster] {
        let (cfg, data) = quick(synth(0.0, 0.0), norm, 5);
        let r = run_experiment(&cfg, &data).unwrap();
        for p in ProbeName::ALL {
            assert!(r.mean_accuracy(p).unwrap() >= 0.95, "{norm:?} {p:?}");
        }
    }
}

#[test]
fn missing_labels_are_reported() {
    let pos = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]).unwrap();
    let set = ContrastPairSet::new(pos.clone(), pos, None, None).unwrap();
    let (cfg, _) = quick(synth(5.0, 4.0), NormMethod::Burns, 1);
    assert!(run_experiment(&cfg, &set).is_err());
}
