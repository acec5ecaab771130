//! Core algorithms for cluster-normalized unsupervised probing.
//!
//! The crate works on contrast-pair activation datasets: for every example
//! there is a "positive" and a "negative" activation vector. It provides
//!
//!  - a synthetic generator with planted, orthonormal feature directions,
//!  - Burns normalization (per side, over the whole dataset) and cluster
//!    normalization (per side, per cluster of pair averages),
//!  - HDBSCAN and k-means for clustering pair averages,
//!  - CCS, CRC-TPC and logistic-regression probes with PCA utilities,
//!  - an experiment harness that reproduces the train/test protocol.
//!
//! Everything here is `no_std` with `alloc`: there is no file or clock
//! access. The `probelab` crate layers IO, file formats and the CLI on top.

#![no_std]

extern crate alloc;

pub mod cluster;
pub mod data;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod norm;
pub mod probes;
pub mod rng;
pub mod synth;

pub use cluster::{ClusterAssignment, ClusterMethod, ClusterParams, Selection};
pub use data::ContrastPairSet;
pub use error::{Error, Result};
pub use eval::{ExperimentConfig, Report};
pub use linalg::Matrix;
pub use norm::{NormStats, Scale};
pub use probes::{CcsHyper, DirectionProbe, LinearProbe, LogregHyper, ProbeKind};
pub use synth::{FeatureBank, SynthConfig};
