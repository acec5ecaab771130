//! Burns normalization, cluster normalization and the pair-level helpers
//! (pair averages and contrast differences).
//!
//! Both normalizations standardize the positive and the negative side
//! independently. Burns normalization uses one group (the whole dataset);
//! cluster normalization uses one group per cluster of pair averages, with
//! HDBSCAN noise rows (label `-1`) forming a group of their own.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::cluster::{ClusterAssignment, NOISE};
use crate::data::ContrastPairSet;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Lower bound applied to every standard deviation.
pub const SIGMA_FLOOR: f64 = 1e-8;

/// How the spread of a group is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// One population standard deviation per dimension.
    #[default]
    PerDimension,
    /// A single standard deviation per group and side: the root mean of the
    /// per-dimension population variances. Scaling is then a multiple of the
    /// identity, so directions inside a group are preserved exactly.
    Isotropic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub id: i64,
    pub count: usize,
    pub mu_pos: Vec<f64>,
    pub sigma_pos: Vec<f64>,
    pub mu_neg: Vec<f64>,
    pub sigma_neg: Vec<f64>,
}

/// Per-group, per-side location and scale, plus the group of every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub scale: Scale,
    pub groups: Vec<GroupStats>,
    pub assignment: Vec<i64>,
}

impl NormStats {
    pub fn d(&self) -> usize {
        self.groups.first().map_or(0, |g| g.mu_pos.len())
    }

    pub fn group(&self, id: i64) -> Option<&GroupStats> {
        self.groups.iter().find(|g| g.id == id)
    }
}

/// Mean and population standard deviation of the selected rows, floored.
fn column_stats(m: &Matrix, rows: &[usize], scale: Scale) -> (Vec<f64>, Vec<f64>) {
    let d = m.cols();
    let n = rows.len() as f64;
    let mut mu = vec![0.0; d];
    for &i in rows {
        for (a, x) in mu.iter_mut().zip(m.row(i)) {
            *a += x;
        }
    }
    mu.iter_mut().for_each(|a| *a /= n);
    // Second pass corrects the rounding error of the first.
    let mut corr = vec![0.0; d];
    for &i in rows {
        for ((c, x), a) in corr.iter_mut().zip(m.row(i)).zip(&mu) {
            *c += x - a;
        }
    }
    for (a, c) in mu.iter_mut().zip(&corr) {
        *a += c / n;
    }
    let mut var = vec![0.0; d];
    for &i in rows {
        for ((v, x), a) in var.iter_mut().zip(m.row(i)).zip(&mu) {
            let e = x - a;
            *v += e * e;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    let sigma = match scale {
        Scale::PerDimension => var
            .iter()
            .map(|v| libm::sqrt(*v).max(SIGMA_FLOOR))
            .collect(),
        Scale::Isotropic => {
            let s = libm::sqrt(var.iter().sum::<f64>() / d as f64).max(SIGMA_FLOOR);
            vec![s; d]
        }
    };
    (mu, sigma)
}

/// Normalizes every pair with the statistics of its group.
pub fn normalize_grouped(
    set: &ContrastPairSet,
    assignment: &[i64],
    scale: Scale,
) -> Result<(ContrastPairSet, NormStats)> {
    if assignment.len() != set.n() {
        return Err(Error::Shape(alloc::format!(
            "{} group ids for {} pairs",
            assignment.len(),
            set.n()
        )));
    }
    let mut members: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &g) in assignment.iter().enumerate() {
        members.entry(g).or_default().push(i);
    }
    if let Some((&group, rows)) = members.iter().find(|(_, rows)| rows.len() < 2) {
        return Err(Error::SmallGroup {
            group,
            size: rows.len(),
        });
    }
    let groups = members
        .iter()
        .map(|(&id, rows)| {
            let (mu_pos, sigma_pos) = column_stats(set.pos(), rows, scale);
            let (mu_neg, sigma_neg) = column_stats(set.neg(), rows, scale);
            GroupStats {
                id,
                count: rows.len(),
                mu_pos,
                sigma_pos,
                mu_neg,
                sigma_neg,
            }
        })
        .collect();
    let stats = NormStats {
        scale,
        groups,
        assignment: assignment.to_vec(),
    };
    let out = apply_norm(set, &stats, None)?;
    Ok((out, stats))
}

/// Standardizes each side over the whole dataset.
pub fn burns_normalize(set: &ContrastPairSet) -> Result<(ContrastPairSet, NormStats)> {
    burns_normalize_with(set, Scale::PerDimension)
}

pub fn burns_normalize_with(
    set: &ContrastPairSet,
    scale: Scale,
) -> Result<(ContrastPairSet, NormStats)> {
    if set.n() < 2 {
        return Err(Error::TooFewRows {
            need: 2,
            got: set.n(),
        });
    }
    normalize_grouped(set, &vec![0; set.n()], scale)
}

/// Standardizes each side within each cluster; noise rows share one group.
pub fn cluster_normalize(
    set: &ContrastPairSet,
    assignment: &ClusterAssignment,
) -> Result<(ContrastPairSet, NormStats)> {
    cluster_normalize_with(set, assignment, Scale::PerDimension)
}

pub fn cluster_normalize_with(
    set: &ContrastPairSet,
    assignment: &ClusterAssignment,
    scale: Scale,
) -> Result<(ContrastPairSet, NormStats)> {
    normalize_grouped(set, &assignment.labels, scale)
}

/// Applies stored statistics. `assignment` overrides the stored group ids
/// (required when `set` is not the dataset the statistics came from, unless
/// the statistics hold a single group).
pub fn apply_norm(
    set: &ContrastPairSet,
    stats: &NormStats,
    assignment: Option<&[i64]>,
) -> Result<ContrastPairSet> {
    if stats.d() != set.d() {
        return Err(Error::Shape(alloc::format!(
            "statistics have d = {}, dataset has d = {}",
            stats.d(),
            set.d()
        )));
    }
    let single;
    let ids: &[i64] = match assignment {
        Some(a) => a,
        None if stats.assignment.len() == set.n() => &stats.assignment,
        None if stats.groups.len() == 1 => {
            single = vec![stats.groups[0].id; set.n()];
            &single
        }
        None => {
            return Err(Error::Shape(alloc::format!(
                "statistics cover {} pairs, dataset has {}; pass an assignment",
                stats.assignment.len(),
                set.n()
            )))
        }
    };
    if ids.len() != set.n() {
        return Err(Error::Shape(alloc::format!(
            "{} group ids for {} pairs",
            ids.len(),
            set.n()
        )));
    }
    let mut pos = set.pos().clone();
    let mut neg = set.neg().clone();
    for (i, &id) in ids.iter().enumerate() {
        let g = stats.group(id).ok_or(Error::UnknownGroup(id))?;
        standardize_row(pos.row_mut(i), &g.mu_pos, &g.sigma_pos);
        standardize_row(neg.row_mut(i), &g.mu_neg, &g.sigma_neg);
    }
    set.with_activations(pos, neg)
}

#[inline]
fn standardize_row(row: &mut [f64], mu: &[f64], sigma: &[f64]) {
    for ((x, m), s) in row.iter_mut().zip(mu).zip(sigma) {
        *x = (*x - m) / s;
    }
}

/// Row `i` is `(pos_i + neg_i) / 2`.
pub fn pair_average(set: &ContrastPairSet) -> Matrix {
    let mut out = set.pos().clone();
    for i in 0..set.n() {
        for (a, b) in out.row_mut(i).iter_mut().zip(set.neg().row(i)) {
            *a = (*a + b) / 2.0;
        }
    }
    out
}

/// Row `i` is `pos_i - neg_i`.
pub fn contrast_diffs(set: &ContrastPairSet) -> Matrix {
    let mut out = set.pos().clone();
    for i in 0..set.n() {
        for (a, b) in out.row_mut(i).iter_mut().zip(set.neg().row(i)) {
            *a -= b;
        }
    }
    out
}

/// Group ids where a lone noise row (which cannot be standardized on its
/// own) is moved into the cluster whose mean pair average is nearest.
pub fn absorb_lone_noise(points: &Matrix, labels: &[i64]) -> Vec<i64> {
    let mut out = labels.to_vec();
    let noise: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == NOISE).collect();
    if noise.len() != 1 {
        return out;
    }
    let lone = noise[0];
    let mut sums: BTreeMap<i64, (Vec<f64>, usize)> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l == NOISE {
            continue;
        }
        let e = sums
            .entry(l)
            .or_insert_with(|| (vec![0.0; points.cols()], 0));
        crate::linalg::axpy(1.0, points.row(i), &mut e.0);
        e.1 += 1;
    }
    let mut best: Option<(f64, i64)> = None;
    for (&id, (sum, count)) in &sums {
        let centre: Vec<f64> = sum.iter().map(|s| s / *count as f64).collect();
        let dist = crate::linalg::euclidean(points.row(lone), &centre);
        if best.is_none_or(|(bd, _)| dist < bd) {
            best = Some((dist, id));
        }
    }
    if let Some((_, id)) = best {
        out[lone] = id;
    }
    out
}
