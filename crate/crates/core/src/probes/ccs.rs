//! Contrast-Consistent Search.
//!
//! Per pair, with `a = p(x+)` and `c = p(x-)`:
//!
//! ```text
//! consistency = (a - (1 - c))^2
//! confidence  = min(a, c)^2
//! ```
//!
//! and the loss is the mean over pairs of their sum. Training runs several
//! seeded restarts of full-batch Adam and keeps the lowest final loss.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{LinearProbe, Predictions, ProbeHyper, ProbeKind};
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, Matrix};
use crate::rng::{derive_seed, stream_rng};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const RESTART_STREAM: u64 = 0xCC5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcsHyper {
    pub restarts: usize,
    pub steps: usize,
    pub learning_rate: f64,
    /// Initial weights are `N(0, 1) * init_scale / sqrt(d)`.
    pub init_scale: f64,
    pub seed: u64,
    pub reduction: Reduction,
}

impl Default for CcsHyper {
    fn default() -> Self {
        Self {
            restarts: 10,
            steps: 1000,
            learning_rate: 1e-2,
            init_scale: 1.0,
            seed: 0,
            reduction: Reduction::Mean,
        }
    }
}

#[inline]
fn pair_loss(a: f64, c: f64) -> f64 {
    let consistency = a - (1.0 - c);
    let confidence = a.min(c);
    consistency * consistency + confidence * confidence
}

/// Derivatives of [`pair_loss`] with respect to `a` and `c`. At `a == c`
/// the minimum is attributed to `a`.
#[inline]
fn pair_grad(a: f64, c: f64) -> (f64, f64) {
    let g = 2.0 * (a + c - 1.0);
    if a <= c {
        (g + 2.0 * a, g)
    } else {
        (g, g + 2.0 * c)
    }
}

/// Mean CCS loss over pairs.
pub fn ccs_loss(p_plus: &[f64], p_minus: &[f64]) -> Result<f64> {
    if p_plus.len() != p_minus.len() || p_plus.is_empty() {
        return Err(Error::Shape(alloc::format!(
            "{} positive vs {} negative probabilities",
            p_plus.len(),
            p_minus.len()
        )));
    }
    if p_plus
        .iter()
        .chain(p_minus)
        .any(|p| !(0.0..=1.0).contains(p))
    {
        return Err(Error::ProbabilityRange);
    }
    let total: f64 = p_plus
        .iter()
        .zip(p_minus)
        .map(|(&a, &c)| pair_loss(a, c))
        .sum();
    Ok(total / p_plus.len() as f64)
}

/// Loss and its gradient with respect to `(w, b)` for the probe
/// `sigmoid(w . x + b)` on the given pairs.
pub fn ccs_objective(w: &[f64], b: f64, pos: &Matrix, neg: &Matrix) -> (f64, Vec<f64>, f64) {
    let mut state = Batch::new(pos.cols(), 1);
    state.w.copy_from_slice(w);
    state.b[0] = b;
    let mut loss = [0.0];
    state.evaluate(pos, neg, &mut loss);
    (loss[0], state.grad_w, state.grad_b[0])
}

/// Parameters for `r` probes, one contiguous `d`-vector per restart.
struct Batch {
    d: usize,
    r: usize,
    w: Vec<f64>,
    b: Vec<f64>,
    grad_w: Vec<f64>,
    grad_b: Vec<f64>,
}

/// `(w . a, w . c)` with four partial sums per product.
#[inline]
fn dot_pair(w: &[f64], a: &[f64], c: &[f64]) -> (f64, f64) {
    let mut sa = [0.0; 4];
    let mut sc = [0.0; 4];
    for ((wk, ak), ck) in w
        .chunks_exact(4)
        .zip(a.chunks_exact(4))
        .zip(c.chunks_exact(4))
    {
        for l in 0..4 {
            sa[l] += wk[l] * ak[l];
            sc[l] += wk[l] * ck[l];
        }
    }
    let mut za = (sa[0] + sa[1]) + (sa[2] + sa[3]);
    let mut zc = (sc[0] + sc[1]) + (sc[2] + sc[3]);
    for k in w.len() / 4 * 4..w.len() {
        za += w[k] * a[k];
        zc += w[k] * c[k];
    }
    (za, zc)
}

impl Batch {
    fn new(d: usize, r: usize) -> Self {
        Self {
            d,
            r,
            w: vec![0.0; d * r],
            b: vec![0.0; r],
            grad_w: vec![0.0; d * r],
            grad_b: vec![0.0; r],
        }
    }

    /// Writes the mean loss of every probe into `loss` and fills the gradients.
    fn evaluate(&mut self, pos: &Matrix, neg: &Matrix, loss: &mut [f64]) {
        let d = self.d;
        let n = pos.rows() as f64;
        self.grad_w.iter_mut().for_each(|g| *g = 0.0);
        self.grad_b.iter_mut().for_each(|g| *g = 0.0);
        loss.iter_mut().for_each(|l| *l = 0.0);
        for i in 0..pos.rows() {
            let (xp, xn) = (pos.row(i), neg.row(i));
            for (j, lj) in loss.iter_mut().enumerate().take(self.r) {
                let (zp, zn) = dot_pair(&self.w[j * d..(j + 1) * d], xp, xn);
                let a = sigmoid(zp + self.b[j]);
                let c = sigmoid(zn + self.b[j]);
                *lj += pair_loss(a, c);
                let (da, dc) = pair_grad(a, c);
                let gp = da * a * (1.0 - a) / n;
                let gn = dc * c * (1.0 - c) / n;
                for ((g, &p), &q) in self.grad_w[j * d..(j + 1) * d].iter_mut().zip(xp).zip(xn) {
                    *g += p * gp + q * gn;
                }
                self.grad_b[j] += gp + gn;
            }
        }
        loss.iter_mut().for_each(|l| *l /= n);
    }
}

/// Trains a CCS probe on already-normalized activations.
pub fn train_ccs(pos: &Matrix, neg: &Matrix, hyper: &CcsHyper) -> Result<LinearProbe> {
    pos.check_same_shape(neg)?;
    if pos.rows() == 0 {
        return Err(Error::TooFewRows { need: 1, got: 0 });
    }
    if hyper.restarts == 0 {
        return Err(Error::Config("restarts must be at least 1".into()));
    }
    let d = pos.cols();
    let r = hyper.restarts;
    let mut batch = Batch::new(d, r);
    let scale = hyper.init_scale / libm::sqrt(d as f64);
    for j in 0..r {
        let mut rng = stream_rng(derive_seed(hyper.seed, RESTART_STREAM, j as u64), 0);
        for k in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            batch.w[j * d + k] = z * scale;
        }
    }

    let mut m_w = vec![0.0; d * r];
    let mut v_w = vec![0.0; d * r];
    let mut m_b = vec![0.0; r];
    let mut v_b = vec![0.0; r];
    let mut alive = vec![true; r];
    let mut loss = vec![0.0; r];
    let lr = hyper.learning_rate;
    let (mut pow1, mut pow2) = (1.0, 1.0);
    for _ in 0..hyper.steps {
        batch.evaluate(pos, neg, &mut loss);
        pow1 *= BETA1;
        pow2 *= BETA2;
        let step = lr * libm::sqrt(1.0 - pow2) / (1.0 - pow1);
        for j in 0..r {
            if !loss[j].is_finite() {
                alive[j] = false;
            }
        }
        let adam = |p: &mut f64, m: &mut f64, v: &mut f64, g: f64| {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= step * *m / (libm::sqrt(*v) + ADAM_EPS);
        };
        for (idx, p) in batch.w.iter_mut().enumerate() {
            if alive[idx / d] {
                adam(p, &mut m_w[idx], &mut v_w[idx], batch.grad_w[idx]);
            }
        }
        for j in 0..r {
            if alive[j] {
                adam(&mut batch.b[j], &mut m_b[j], &mut v_b[j], batch.grad_b[j]);
            }
        }
    }
    batch.evaluate(pos, neg, &mut loss);

    let best = (0..r)
        .filter(|&j| alive[j] && loss[j].is_finite())
        .min_by(|&a, &b| loss[a].total_cmp(&loss[b]).then(a.cmp(&b)))
        .ok_or(Error::Diverged)?;
    let w = batch.w[best * d..(best + 1) * d].to_vec();
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::Diverged);
    }
    Ok(LinearProbe {
        kind: ProbeKind::Ccs,
        w,
        b: batch.b[best],
        flipped: false,
        final_loss: loss[best],
        hyper: ProbeHyper::Ccs(hyper.clone()),
    })
}

/// Scores `(p(x+) + 1 - p(x-)) / 2`; label 1 iff the score exceeds 0.5.
/// A flipped probe inverts both.
pub fn ccs_predict(probe: &LinearProbe, pos: &Matrix, neg: &Matrix) -> Result<Predictions> {
    pos.check_same_shape(neg)?;
    if pos.cols() != probe.w.len() {
        return Err(Error::Shape(alloc::format!(
            "probe has d = {}, data has d = {}",
            probe.w.len(),
            pos.cols()
        )));
    }
    let mut scores = Vec::with_capacity(pos.rows());
    let mut labels = Vec::with_capacity(pos.rows());
    for i in 0..pos.rows() {
        let s = (probe.probability(pos.row(i)) + 1.0 - probe.probability(neg.row(i))) / 2.0;
        let l = u8::from(s > 0.5);
        if probe.flipped {
            scores.push(1.0 - s);
            labels.push(1 - l);
        } else {
            scores.push(s);
            labels.push(l);
        }
    }
    Ok(Predictions { labels, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_reference_points() {
        assert!((ccs_loss(&[0.5], &[0.5]).unwrap() - 0.25).abs() < 1e-12);
        assert!(ccs_loss(&[1.0], &[0.0]).unwrap().abs() < 1e-12);
        assert!((ccs_loss(&[0.8], &[0.3]).unwrap() - 0.10).abs() < 1e-12);
    }

    #[test]
    fn loss_rejects_bad_input() {
        assert_eq!(ccs_loss(&[1.2], &[0.0]), Err(Error::ProbabilityRange));
        assert!(ccs_loss(&[0.2, 0.1], &[0.0]).is_err());
    }

    #[test]
    fn prediction_rule() {
        let probe = LinearProbe {
            kind: ProbeKind::Ccs,
            w: vec![1.0],
            b: 0.0,
            flipped: false,
            final_loss: 0.0,
            hyper: ProbeHyper::Ccs(CcsHyper::default()),
        };
        // logit(0.9) and logit(0.2)
        let pos = Matrix::from_vec(2, 1, vec![libm::log(9.0), 0.0]).unwrap();
        let neg = Matrix::from_vec(2, 1, vec![libm::log(0.25), 0.0]).unwrap();
        let p = ccs_predict(&probe, &pos, &neg).unwrap();
        assert!((p.scores[0] - 0.85).abs() < 1e-12);
        assert_eq!(p.labels, vec![1, 0]);
        let mut flipped = probe.clone();
        flipped.flipped = true;
        assert_eq!(
            ccs_predict(&flipped, &pos, &neg).unwrap().labels,
            vec![0, 1]
        );
    }

    #[test]
    fn batched_gradient_matches_single_probe() {
        let pos = Matrix::from_vec(3, 2, vec![0.3, -1.0, 2.0, 0.5, -0.7, 0.1]).unwrap();
        let neg = Matrix::from_vec(3, 2, vec![1.1, 0.4, -0.2, 0.9, 0.6, -1.3]).unwrap();
        let ws = [[0.5, -0.25], [-1.0, 2.0]];
        let mut batch = Batch::new(2, 2);
        for (j, w) in ws.iter().enumerate() {
            batch.w[2 * j..2 * j + 2].copy_from_slice(w);
            batch.b[j] = 0.1 * j as f64;
        }
        let mut loss = [0.0; 2];
        batch.evaluate(&pos, &neg, &mut loss);
        for (j, w) in ws.iter().enumerate() {
            let (l, gw, gb) = ccs_objective(w, 0.1 * j as f64, &pos, &neg);
            assert_eq!(l, loss[j]);
            assert_eq!(gw, batch.grad_w[2 * j..2 * j + 2]);
            assert_eq!(gb, batch.grad_b[j]);
        }
    }
}
