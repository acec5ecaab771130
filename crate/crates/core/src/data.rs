//! The contrast-pair dataset model.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Key under which ground-truth labels are addressed by [`ContrastPairSet::label_vector`].
pub const LABEL_KEY: &str = "label";

pub type RowMeta = BTreeMap<String, String>;

/// Paired positive/negative activations, one row per contrast pair.
///
/// `labels[i] == 1` means the positive statement of pair `i` is the true one.
/// The set is validated on construction and immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastPairSet {
    pos: Matrix,
    neg: Matrix,
    labels: Option<Vec<u8>>,
    meta: Option<Vec<RowMeta>>,
}

impl ContrastPairSet {
    pub fn new(
        pos: Matrix,
        neg: Matrix,
        labels: Option<Vec<u8>>,
        meta: Option<Vec<RowMeta>>,
    ) -> Result<Self> {
        pos.check_same_shape(&neg)?;
        if pos.rows() == 0 || pos.cols() == 0 {
            return Err(Error::Shape(format!(
                "dataset must be at least 1x1, got {}x{}",
                pos.rows(),
                pos.cols()
            )));
        }
        if let Some((row, col)) = pos.first_non_finite() {
            return Err(Error::NonFinite {
                what: "pos",
                row,
                col,
            });
        }
        if let Some((row, col)) = neg.first_non_finite() {
            return Err(Error::NonFinite {
                what: "neg",
                row,
                col,
            });
        }
        if let Some(l) = &labels {
            if l.len() != pos.rows() {
                return Err(Error::Labels(format!(
                    "{} labels for {} rows",
                    l.len(),
                    pos.rows()
                )));
            }
            if let Some(i) = l.iter().position(|&v| v > 1) {
                return Err(Error::Labels(format!(
                    "label {} at row {i} is not 0/1",
                    l[i]
                )));
            }
        }
        if let Some(m) = &meta {
            if m.len() != pos.rows() {
                return Err(Error::Shape(format!(
                    "{} metadata rows for {} pairs",
                    m.len(),
                    pos.rows()
                )));
            }
        }
        Ok(Self {
            pos,
            neg,
            labels,
            meta,
        })
    }

    pub fn n(&self) -> usize {
        self.pos.rows()
    }

    pub fn d(&self) -> usize {
        self.pos.cols()
    }

    pub fn pos(&self) -> &Matrix {
        &self.pos
    }

    pub fn neg(&self) -> &Matrix {
        &self.neg
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn meta(&self) -> Option<&[RowMeta]> {
        self.meta.as_deref()
    }

    /// Same labels and metadata, new activations.
    pub fn with_activations(&self, pos: Matrix, neg: Matrix) -> Result<Self> {
        Self::new(pos, neg, self.labels.clone(), self.meta.clone())
    }

    /// Subset of rows in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            pos: self.pos.select_rows(idx),
            neg: self.neg.select_rows(idx),
            labels: self
                .labels
                .as_ref()
                .map(|l| idx.iter().map(|&i| l[i]).collect()),
            meta: self
                .meta
                .as_ref()
                .map(|m| idx.iter().map(|&i| m[i].clone()).collect()),
        }
    }

    /// Binary labels addressed by `key`: `"label"` is the ground truth, any
    /// other key is read from the per-row metadata and must hold `0` or `1`.
    pub fn label_vector(&self, key: &str) -> Result<Vec<u8>> {
        if key == LABEL_KEY {
            if let Some(l) = &self.labels {
                return Ok(l.clone());
            }
        }
        let meta = self
            .meta
            .as_ref()
            .ok_or_else(|| Error::MissingLabels(key.to_string()))?;
        meta.iter()
            .enumerate()
            .map(|(i, row)| {
                let v = row
                    .get(key)
                    .ok_or_else(|| Error::MissingLabels(key.to_string()))?;
                match v.trim() {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    other => Err(Error::Labels(format!(
                        "metadata `{key}` at row {i} is `{other}`, expected 0 or 1"
                    ))),
                }
            })
            .collect()
    }
}
