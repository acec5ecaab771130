//! Probing methods: CCS (trained, unsupervised), CRC-TPC (top principal
//! component of normalized differences) and logistic regression (supervised
//! ceiling), plus the PCA routines they share.

mod ccs;
mod crc;
mod logreg;
mod pca;

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::linalg::{dot, sigmoid};

pub use ccs::{ccs_loss, ccs_objective, ccs_predict, train_ccs, CcsHyper, Reduction};
pub use crc::{crc_predict, crc_tpc};
pub use logreg::{logreg_predict, train_logreg, LogregHyper};
pub use pca::{pca_top_k, top_principal_component, Pca, POWER_MAX_ITERS, POWER_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Ccs,
    Logreg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProbeHyper {
    Ccs(CcsHyper),
    Logreg(LogregHyper),
}

/// `p(x) = sigmoid(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub kind: ProbeKind,
    pub w: Vec<f64>,
    pub b: f64,
    /// Set when evaluation found the probe's labels inverted; predictions
    /// honour it.
    pub flipped: bool,
    pub final_loss: f64,
    pub hyper: ProbeHyper,
}

impl LinearProbe {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(dot(&self.w, x) + self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// The entry of largest magnitude is positive.
    #[default]
    LargestEntryPositive,
}

/// A unit direction used as a classifier through the sign of projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionProbe {
    pub u: Vec<f64>,
    pub flipped: bool,
    pub sign_convention: SignConvention,
    /// Variance of the data along `u`.
    pub eigenvalue: f64,
}

/// Hard labels with the score they were thresholded from.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub labels: Vec<u8>,
    pub scores: Vec<f64>,
}
