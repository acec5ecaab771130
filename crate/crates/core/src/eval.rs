//! Experiment harness: splitting, accuracy, repeated probe fits and the
//! variance decomposition of contrast differences.
//!
//! Each fit splits the pairs, normalizes the train split with the configured
//! method (Burns, or per cluster of train pair averages), trains the probes on
//! it, Burns-normalizes the test split with its own statistics and scores the
//! probes there.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_pair_averages, ClusterAssignment, ClusterParams};
use crate::data::{ContrastPairSet, LABEL_KEY};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::norm::{
    absorb_lone_noise, burns_normalize_with, contrast_diffs, normalize_grouped, pair_average,
    NormStats, Scale,
};
use crate::probes::{
    ccs_predict, crc_predict, crc_tpc, logreg_predict, train_ccs, train_logreg, CcsHyper,
    LogregHyper,
};
use crate::rng::{derive_seed, stream_rng};
use crate::synth::{SynthConfig, DISTRACTOR_KEY};

pub const REPORT_VERSION: u32 = 1;

const FIT_STREAM: u64 = 0xF17;
const SPLIT_STREAM: u64 = 0x5B1;
const CCS_STREAM: u64 = 1;
const LOGREG_STREAM: u64 = 2;
const CLUSTER_STREAM: u64 = 3;
const SPLIT_SUBSTREAM: u64 = 4;

/// Seeded split: the first `ceil(ratio * n)` rows of a random permutation
/// train, the rest test. Returns sorted row indices.
pub fn split_indices(n: usize, ratio: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(alloc::format!(
            "split ratio must lie in (0, 1), got {ratio}"
        )));
    }
    // The tolerance keeps 0.7 * 10 = 7.000000000000001 at 7.
    let n_train = libm::ceil(ratio * n as f64 - 1e-9) as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::EmptySplit { n, ratio });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut stream_rng(seed, 0));
    let mut train = perm[..n_train].to_vec();
    let mut test = perm[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    set: &ContrastPairSet,
    ratio: f64,
    seed: u64,
) -> Result<(ContrastPairSet, ContrastPairSet)> {
    let (train, test) = split_indices(set.n(), ratio, seed)?;
    Ok((set.select(&train), set.select(&test)))
}

/// Fraction of positions where `pred` equals `labels`.
pub fn accuracy(pred: &[u8], labels: &[u8]) -> Result<f64> {
    if pred.len() != labels.len() || pred.is_empty() {
        return Err(Error::Labels(alloc::format!(
            "{} predictions for {} labels",
            pred.len(),
            labels.len()
        )));
    }
    let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

pub fn flip_corrected_accuracy(pred: &[u8], labels: &[u8]) -> Result<f64> {
    let a = accuracy(pred, labels)?;
    Ok(a.max(1.0 - a))
}

/// Terms of `Var(X - Y)` for `X = w . pos_i`, `Y = w . neg_i`:
/// `var = confidence + consistency - mean_term`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceDecomposition {
    /// `E[X^2] + E[Y^2]`.
    pub confidence: f64,
    /// `-2 E[XY]`.
    pub consistency: f64,
    /// `E[X]^2 + E[Y]^2 - 2 E[X] E[Y]`.
    pub mean_term: f64,
    /// Population variance of `X - Y`, computed directly.
    pub var: f64,
}

pub fn variance_decomposition(
    pos: &Matrix,
    neg: &Matrix,
    w: &[f64],
) -> Result<VarianceDecomposition> {
    pos.check_same_shape(neg)?;
    if w.len() != pos.cols() {
        return Err(Error::Shape(alloc::format!(
            "direction has length {}, data has d = {}",
            w.len(),
            pos.cols()
        )));
    }
    if pos.rows() == 0 {
        return Err(Error::TooFewRows { need: 1, got: 0 });
    }
    if dot(w, w) == 0.0 {
        return Err(Error::ZeroDirection);
    }
    let n = pos.rows() as f64;
    let xs: Vec<f64> = pos.row_iter().map(|r| dot(w, r)).collect();
    let ys: Vec<f64> = neg.row_iter().map(|r| dot(w, r)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (ex, ey) = (mean(&xs), mean(&ys));
    let exx = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let eyy = ys.iter().map(|y| y * y).sum::<f64>() / n;
    let exy = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / n;
    let diff: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| x - y).collect();
    let md = mean(&diff);
    let var = diff.iter().map(|d| (d - md) * (d - md)).sum::<f64>() / n;
    Ok(VarianceDecomposition {
        confidence: exx + eyy,
        consistency: -2.0 * exy,
        mean_term: ex * ex + ey * ey - 2.0 * ex * ey,
        var,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Synthetic(SynthConfig),
    Dataset { path: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    Burns,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeName {
    Ccs,
    CrcTpc,
    Logreg,
}

impl ProbeName {
    pub const ALL: [ProbeName; 3] = [ProbeName::Ccs, ProbeName::CrcTpc, ProbeName::Logreg];

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeName::Ccs => "ccs",
            ProbeName::CrcTpc => "crc_tpc",
            ProbeName::Logreg => "logreg",
        }
    }
}

fn default_probes() -> Vec<ProbeName> {
    ProbeName::ALL.to_vec()
}
fn default_fits() -> usize {
    50
}
fn default_split_ratio() -> f64 {
    0.7
}
fn default_true() -> bool {
    true
}
fn default_label_key() -> String {
    LABEL_KEY.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub norm: NormMethod,
    /// Spread used by the train-time normalization.
    #[serde(default)]
    pub scale: Scale,
    /// Clustering for cluster normalization. `oracle` groups rows by their
    /// `distractor` metadata.
    #[serde(default)]
    pub cluster: ClusterParams,
    #[serde(default = "default_probes")]
    pub probes: Vec<ProbeName>,
    #[serde(default = "default_fits")]
    pub fits: usize,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    /// Draw a new split for every fit; otherwise all fits share one split.
    #[serde(default = "default_true")]
    pub refit_split: bool,
    pub seed: u64,
    /// `label` for ground truth, or any metadata key with 0/1 values.
    #[serde(default = "default_label_key")]
    pub label_key: String,
    #[serde(default)]
    pub ccs: CcsHyper,
    #[serde(default)]
    pub logreg: LogregHyper,
}

impl ExperimentConfig {
    pub fn new(data: DataSource, norm: NormMethod, seed: u64) -> Self {
        Self {
            data,
            norm,
            scale: Scale::default(),
            cluster: ClusterParams::default(),
            probes: default_probes(),
            fits: default_fits(),
            split_ratio: default_split_ratio(),
            refit_split: true,
            seed,
            label_key: default_label_key(),
            ccs: CcsHyper::default(),
            logreg: LogregHyper::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fits == 0 {
            return Err(Error::Config("fits must be at least 1".into()));
        }
        if self.probes.is_empty() {
            return Err(Error::Config("no probes selected".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::Config(alloc::format!(
                "split_ratio must lie in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if let DataSource::Synthetic(s) = &self.data {
            s.validate()?;
        }
        Ok(())
    }

    /// The probe list without duplicates, in canonical order.
    pub fn probe_set(&self) -> Vec<ProbeName> {
        ProbeName::ALL
            .into_iter()
            .filter(|p| self.probes.contains(p))
            .collect()
    }

    /// Seed of fit `fit`.
    pub fn fit_seed(&self, fit: usize) -> u64 {
        derive_seed(self.seed, FIT_STREAM, fit as u64)
    }

    /// Seed of the train/test split used by fit `fit`.
    pub fn split_seed(&self, fit: usize) -> u64 {
        if self.refit_split {
            derive_seed(self.fit_seed(fit), SPLIT_SUBSTREAM, 0)
        } else {
            derive_seed(self.seed, SPLIT_STREAM, 0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub fit: usize,
    pub seed: u64,
    /// Flip-corrected accuracy on the test split.
    pub accuracy: Option<f64>,
    pub raw_accuracy: Option<f64>,
    pub flipped: bool,
    pub final_loss: Option<f64>,
    pub error: Option<String>,
}

impl FitRecord {
    fn failed(fit: usize, seed: u64, error: &Error) -> Self {
        Self {
            fit,
            seed,
            accuracy: None,
            raw_accuracy: None,
            flipped: false,
            final_loss: None,
            error: Some(error.to_string()),
        }
    }
}

/// Summary statistics; `std` is the population standard deviation and
/// quartiles interpolate linearly between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = libm::floor(pos) as usize;
            let hi = (lo + 1).min(v.len() - 1);
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        };
        Some(Self {
            count: v.len(),
            mean,
            std: libm::sqrt(var),
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: ProbeName,
    pub fits: Vec<FitRecord>,
    pub accuracy: Option<Summary>,
    pub raw_accuracy: Option<Summary>,
    pub failures: usize,
}

impl MethodReport {
    pub fn from_fits(method: ProbeName, fits: Vec<FitRecord>) -> Self {
        let acc: Vec<f64> = fits.iter().filter_map(|f| f.accuracy).collect();
        let raw: Vec<f64> = fits.iter().filter_map(|f| f.raw_accuracy).collect();
        Self {
            method,
            failures: fits.iter().filter(|f| f.error.is_some()).count(),
            accuracy: Summary::of(&acc),
            raw_accuracy: Summary::of(&raw),
            fits,
        }
    }
}

/// Train-split clustering of one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub fit: usize,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub noise: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub version: u32,
    pub config: ExperimentConfig,
    pub n: usize,
    pub d: usize,
    pub methods: Vec<MethodReport>,
    /// Empty under Burns normalization.
    pub clusters: Vec<ClusterSummary>,
    /// Only filled in on request, so reports stay reproducible byte for byte.
    pub wall_clock_secs: Option<f64>,
}

impl Report {
    pub fn method(&self, name: ProbeName) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == name)
    }

    /// Mean flip-corrected accuracy of a method.
    pub fn mean_accuracy(&self, name: ProbeName) -> Option<f64> {
        self.method(name)?.accuracy.map(|s| s.mean)
    }
}

/// Train-side normalization of one fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSide {
    pub normalized: ContrastPairSet,
    pub stats: NormStats,
    pub assignment: Option<ClusterAssignment>,
}

/// Normalizes a train split. Only `train` is read, so nothing leaks from
/// the test split.
pub fn normalize_train(
    cfg: &ExperimentConfig,
    train: &ContrastPairSet,
    fit_seed: u64,
) -> Result<TrainSide> {
    match cfg.norm {
        NormMethod::Burns => {
            let (normalized, stats) = burns_normalize_with(train, cfg.scale)?;
            Ok(TrainSide {
                normalized,
                stats,
                assignment: None,
            })
        }
        NormMethod::Cluster => {
            let assignment = match &cfg.cluster {
                ClusterParams::Oracle => {
                    let groups = train
                        .meta()
                        .ok_or_else(|| Error::MissingLabels(DISTRACTOR_KEY.into()))?
                        .iter()
                        .map(|m| {
                            m.get(DISTRACTOR_KEY)
                                .and_then(|v| v.parse::<i64>().ok())
                                .ok_or_else(|| Error::MissingLabels(DISTRACTOR_KEY.into()))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    ClusterAssignment::from_labels(groups, ClusterParams::Oracle)
                }
                ClusterParams::Kmeans(p) => {
                    let mut p = p.clone();
                    p.seed = derive_seed(fit_seed, CLUSTER_STREAM, 0);
                    cluster_pair_averages(train, &ClusterParams::Kmeans(p))?
                }
                other => cluster_pair_averages(train, other)?,
            };
            let groups = absorb_lone_noise(&pair_average(train), &assignment.labels);
            let (normalized, stats) = normalize_grouped(train, &groups, cfg.scale)?;
            Ok(TrainSide {
                normalized,
                stats,
                assignment: Some(assignment),
            })
        }
    }
}

/// Runs one fit and returns one record per selected probe (in
/// [`ExperimentConfig::probe_set`] order) plus the train clustering.
pub fn run_fit(
    cfg: &ExperimentConfig,
    data: &ContrastPairSet,
    fit: usize,
) -> (Vec<FitRecord>, Option<ClusterSummary>) {
    let probes = cfg.probe_set();
    let seed = cfg.fit_seed(fit);
    let prepared = (|| {
        let (train_idx, test_idx) = split_indices(data.n(), cfg.split_ratio, cfg.split_seed(fit))?;
        let train = data.select(&train_idx);
        let test = data.select(&test_idx);
        let side = normalize_train(cfg, &train, seed)?;
        let (test_norm, _) = burns_normalize_with(&test, Scale::PerDimension)?;
        let train_labels = train.label_vector(&cfg.label_key)?;
        let test_labels = test.label_vector(&cfg.label_key)?;
        Ok::<_, Error>((side, test_norm, train_labels, test_labels))
    })();
    let (side, test_norm, train_labels, test_labels) = match prepared {
        Ok(p) => p,
        Err(e) => {
            let records = probes
                .iter()
                .map(|_| FitRecord::failed(fit, seed, &e))
                .collect();
            return (records, None);
        }
    };
    let clusters = side.assignment.as_ref().map(|a| ClusterSummary {
        fit,
        k: a.k,
        sizes: a.sizes(),
        noise: a.noise_count(),
    });
    let train = &side.normalized;
    let records = probes
        .iter()
        .map(|&p| {
            let outcome = (|| -> Result<(Vec<u8>, Option<f64>)> {
                match p {
                    ProbeName::Ccs => {
                        let hyper = CcsHyper {
                            seed: derive_seed(seed, CCS_STREAM, 0),
                            ..cfg.ccs.clone()
                        };
                        let probe = train_ccs(train.pos(), train.neg(), &hyper)?;
                        let pred = ccs_predict(&probe, test_norm.pos(), test_norm.neg())?;
                        Ok((pred.labels, Some(probe.final_loss)))
                    }
                    ProbeName::CrcTpc => {
                        let probe = crc_tpc(&contrast_diffs(train))?;
                        let pred = crc_predict(&probe, &contrast_diffs(&test_norm))?;
                        Ok((pred, None))
                    }
                    ProbeName::Logreg => {
                        let hyper = LogregHyper {
                            seed: derive_seed(seed, LOGREG_STREAM, 0),
                            ..cfg.logreg.clone()
                        };
                        let probe = train_logreg(&contrast_diffs(train), &train_labels, &hyper)?;
                        let pred = logreg_predict(&probe, &contrast_diffs(&test_norm))?;
                        Ok((pred.labels, Some(probe.final_loss)))
                    }
                }
            })();
            match outcome.and_then(|(pred, loss)| Ok((accuracy(&pred, &test_labels)?, loss))) {
                Ok((raw, final_loss)) => FitRecord {
                    fit,
                    seed,
                    accuracy: Some(raw.max(1.0 - raw)),
                    raw_accuracy: Some(raw),
                    flipped: raw < 0.5,
                    final_loss,
                    error: None,
                },
                Err(e) => FitRecord::failed(fit, seed, &e),
            }
        })
        .collect();
    (records, clusters)
}

/// Assembles per-fit outputs (indexed by fit) into a report.
pub fn assemble_report(
    cfg: &ExperimentConfig,
    data: &ContrastPairSet,
    per_fit: Vec<(Vec<FitRecord>, Option<ClusterSummary>)>,
) -> Report {
    let probes = cfg.probe_set();
    let mut columns: Vec<Vec<FitRecord>> = vec![Vec::with_capacity(per_fit.len()); probes.len()];
    let mut clusters = Vec::new();
    for (records, summary) in per_fit {
        for (col, r) in columns.iter_mut().zip(records) {
            col.push(r);
        }
        clusters.extend(summary);
    }
    Report {
        version: REPORT_VERSION,
        config: cfg.clone(),
        n: data.n(),
        d: data.d(),
        methods: probes
            .into_iter()
            .zip(columns)
            .map(|(p, fits)| MethodReport::from_fits(p, fits))
            .collect(),
        clusters,
        wall_clock_secs: None,
    }
}

/// Checks that `data` carries the evaluation labels.
pub fn check_data(cfg: &ExperimentConfig, data: &ContrastPairSet) -> Result<()> {
    cfg.validate()?;
    data.label_vector(&cfg.label_key)?;
    Ok(())
}

/// Runs every fit sequentially. `data` is the resolved data source.
pub fn run_experiment(cfg: &ExperimentConfig, data: &ContrastPairSet) -> Result<Report> {
    check_data(cfg, data)?;
    let per_fit = (0..cfg.fits).map(|f| run_fit(cfg, data, f)).collect();
    Ok(assemble_report(cfg, data, per_fit))
}
