//! Synthetic contrast pairs built from planted, orthonormal feature directions.
//!
//! Each pair mixes a syntactic feature (`F+` in the positive element, `F-`
//! in the negative one), a knowledge feature (`F_true` or `F_false`, opposite
//! in the two elements), one of `m` non-contrastive distractors `F_j`, and
//! XOR-induced directions that combine the distractor with either the syntax
//! or the knowledge side. Every ingredient has its own orthonormal row in the
//! [`FeatureBank`], so tests can check generated data against exact
//! projections.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{ContrastPairSet, RowMeta, LABEL_KEY};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::stream_rng;

/// Metadata key carrying the distractor index of a synthetic row.
pub const DISTRACTOR_KEY: &str = "distractor";

const BANK_STREAM: u64 = 0;
const ASSIGN_STREAM: u64 = 1;
const ROW_STREAM_BASE: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Truth {
    True,
    False,
}

/// What a feature-bank row stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Plus,
    Minus,
    KnowTrue,
    KnowFalse,
    Distractor(usize),
    XorPm { side: Side, distractor: usize },
    XorKnow { truth: Truth, distractor: usize },
}

/// Number of bank rows needed for `m` distractors.
pub const fn rows_needed(m: usize) -> usize {
    4 + m + 2 * m + 2 * m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBank {
    directions: Matrix,
    roles: Vec<Role>,
    distractors: usize,
}

impl FeatureBank {
    pub fn directions(&self) -> &Matrix {
        &self.directions
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    /// Number of rows `k`.
    pub fn k(&self) -> usize {
        self.roles.len()
    }

    pub fn distractors(&self) -> usize {
        self.distractors
    }

    pub fn index_of(&self, role: Role) -> Option<usize> {
        let m = self.distractors;
        let idx = match role {
            Role::Plus => 0,
            Role::Minus => 1,
            Role::KnowTrue => 2,
            Role::KnowFalse => 3,
            Role::Distractor(j) if j < m => 4 + j,
            Role::XorPm { side, distractor } if distractor < m => {
                4 + m + 2 * distractor + usize::from(side == Side::Minus)
            }
            Role::XorKnow { truth, distractor } if distractor < m => {
                4 + 3 * m + 2 * distractor + usize::from(truth == Truth::False)
            }
            _ => return None,
        };
        Some(idx)
    }

    /// Unit direction for `role`. Panics when the role is outside the bank.
    pub fn direction(&self, role: Role) -> &[f64] {
        let i = self.index_of(role).unwrap_or_else(|| {
            panic!(
                "role {role:?} not in a bank with {} distractors",
                self.distractors
            )
        });
        self.directions.row(i)
    }

    /// `F_true - F_false`.
    pub fn knowledge_difference(&self) -> Vec<f64> {
        linalg::sub(
            self.direction(Role::KnowTrue),
            self.direction(Role::KnowFalse),
        )
    }

    /// `F+ - F-`.
    pub fn syntax_difference(&self) -> Vec<f64> {
        linalg::sub(self.direction(Role::Plus), self.direction(Role::Minus))
    }

    /// XOR-induced syntax difference for distractor `j`: `F_{f(+,j)} - F_{f(-,j)}`.
    pub fn xor_pm_difference(&self, j: usize) -> Vec<f64> {
        linalg::sub(
            self.direction(Role::XorPm {
                side: Side::Plus,
                distractor: j,
            }),
            self.direction(Role::XorPm {
                side: Side::Minus,
                distractor: j,
            }),
        )
    }

    /// XOR-induced knowledge difference for distractor `j`: `F_{f(T,j)} - F_{f(F,j)}`.
    pub fn xor_know_difference(&self, j: usize) -> Vec<f64> {
        linalg::sub(
            self.direction(Role::XorKnow {
                truth: Truth::True,
                distractor: j,
            }),
            self.direction(Role::XorKnow {
                truth: Truth::False,
                distractor: j,
            }),
        )
    }
}

/// Orthonormal bank for `m` distractors in `d` dimensions, from seeded
/// Gaussian vectors run through Gram-Schmidt (twice, for accuracy).
pub fn make_feature_bank(d: usize, m: usize, seed: u64) -> Result<FeatureBank> {
    let k = rows_needed(m);
    if m == 0 {
        return Err(Error::Config(
            "at least one distractor is required".to_string(),
        ));
    }
    if d < k {
        return Err(Error::Config(format!(
            "d = {d} is too small for {m} distractor(s); need d >= {k}"
        )));
    }
    let mut rng = stream_rng(seed, BANK_STREAM);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(k);
    while rows.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..2 {
            for r in &rows {
                let c = linalg::dot(&v, r);
                linalg::axpy(-c, r, &mut v);
            }
        }
        // A draw (numerically) inside the current span is discarded.
        if linalg::normalize(&mut v) > 1e-6 {
            rows.push(v);
        }
    }

    let mut roles = vec![Role::Plus, Role::Minus, Role::KnowTrue, Role::KnowFalse];
    roles.extend((0..m).map(Role::Distractor));
    for j in 0..m {
        roles.push(Role::XorPm {
            side: Side::Plus,
            distractor: j,
        });
        roles.push(Role::XorPm {
            side: Side::Minus,
            distractor: j,
        });
    }
    for j in 0..m {
        roles.push(Role::XorKnow {
            truth: Truth::True,
            distractor: j,
        });
        roles.push(Role::XorKnow {
            truth: Truth::False,
            distractor: j,
        });
    }
    Ok(FeatureBank {
        directions: Matrix::from_rows(&rows)?,
        roles,
        distractors: m,
    })
}

/// Saliency coefficients of the planted features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coefficients {
    pub c_pm: f64,
    pub c_know: f64,
    pub c_distract: f64,
    pub c_xor_pm: f64,
    pub c_xor_know: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub m: usize,
    pub coefficients: Coefficients,
    pub noise_sigma: f64,
    pub balanced: bool,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!(
                "n = {} but at least 2 pairs are required",
                self.n
            )));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".to_string()));
        }
        if self.d < rows_needed(self.m) {
            return Err(Error::Config(format!(
                "d = {} is too small for m = {}; need d >= {}",
                self.d,
                self.m,
                rows_needed(self.m)
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Config(
                "noise_sigma must be finite and >= 0".to_string(),
            ));
        }
        let c = &self.coefficients;
        if ![c.c_pm, c.c_know, c.c_distract, c.c_xor_pm, c.c_xor_know]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::Config("coefficients must be finite".to_string()));
        }
        if self.balanced && !self.n.is_multiple_of(self.m) {
            return Err(Error::Config(format!(
                "balanced mode needs m = {} to divide n = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

/// A generated dataset with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub set: ContrastPairSet,
    pub bank: FeatureBank,
    pub labels: Vec<u8>,
    pub distractor: Vec<usize>,
}

pub fn generate_synthetic(cfg: &SynthConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let bank = make_feature_bank(cfg.d, cfg.m, cfg.seed)?;
    let (labels, distractor) = assign_rows(cfg);

    let c = cfg.coefficients;
    let d = cfg.d;
    let mut pos = Matrix::zeros(cfg.n, d);
    let mut neg = Matrix::zeros(cfg.n, d);
    for i in 0..cfg.n {
        let j = distractor[i];
        let (truth_pos, truth_neg) = if labels[i] == 1 {
            (Truth::True, Truth::False)
        } else {
            (Truth::False, Truth::True)
        };
        let know = |t: Truth| match t {
            Truth::True => Role::KnowTrue,
            Truth::False => Role::KnowFalse,
        };
        let terms = |side: Side, truth: Truth| {
            [
                (
                    c.c_pm,
                    if side == Side::Plus {
                        Role::Plus
                    } else {
                        Role::Minus
                    },
                ),
                (c.c_know, know(truth)),
                (c.c_distract, Role::Distractor(j)),
                (
                    c.c_xor_pm,
                    Role::XorPm {
                        side,
                        distractor: j,
                    },
                ),
                (
                    c.c_xor_know,
                    Role::XorKnow {
                        truth,
                        distractor: j,
                    },
                ),
            ]
        };
        let mut rng = stream_rng(cfg.seed, ROW_STREAM_BASE + i as u64);
        for (out, side, truth) in [
            (pos.row_mut(i), Side::Plus, truth_pos),
            (neg.row_mut(i), Side::Minus, truth_neg),
        ] {
            for (coef, role) in terms(side, truth) {
                if coef != 0.0 {
                    linalg::axpy(coef, bank.direction(role), out);
                }
            }
            if cfg.noise_sigma > 0.0 {
                for x in out.iter_mut() {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    *x += cfg.noise_sigma * e;
                }
            }
        }
    }

    let meta = labels
        .iter()
        .zip(&distractor)
        .map(|(l, j)| {
            RowMeta::from([
                (LABEL_KEY.to_string(), l.to_string()),
                (DISTRACTOR_KEY.to_string(), j.to_string()),
            ])
        })
        .collect();
    let set = ContrastPairSet::new(pos, neg, Some(labels.clone()), Some(meta))?;
    Ok(SyntheticData {
        set,
        bank,
        labels,
        distractor,
    })
}

/// Label and distractor per row. Balanced mode gives every distractor the
/// same number of rows and, within each distractor, alternating labels; the
/// row order is then shuffled.
fn assign_rows(cfg: &SynthConfig) -> (Vec<u8>, Vec<usize>) {
    let mut rng = stream_rng(cfg.seed, ASSIGN_STREAM);
    if cfg.balanced {
        let mut rows: Vec<(u8, usize)> = (0..cfg.n)
            .map(|i| (((i / cfg.m) % 2) as u8, i % cfg.m))
            .collect();
        rows.shuffle(&mut rng);
        rows.into_iter().unzip()
    } else {
        (0..cfg.n)
            .map(|_| (u8::from(rng.random_bool(0.5)), rng.random_range(0..cfg.m)))
            .unzip()
    }
}
