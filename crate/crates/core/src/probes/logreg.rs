//! Logistic regression by full-batch gradient descent, used as the
//! supervised ceiling for the unsupervised probes.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{LinearProbe, Predictions, ProbeHyper, ProbeKind};
use crate::error::{Error, Result};
use crate::linalg::{dot, normalize, sigmoid, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogregHyper {
    /// Penalty `l2_lambda * |w|^2 / 2` (the bias is not penalized).
    pub l2_lambda: f64,
    pub steps: usize,
    /// Step size; `None` uses `1 / L` with `L` the smoothness constant of
    /// the objective, estimated by power iteration.
    pub learning_rate: Option<f64>,
    /// Recorded with the probe. Training starts from zero weights, so the
    /// result does not depend on it.
    pub seed: u64,
}

impl Default for LogregHyper {
    fn default() -> Self {
        Self {
            l2_lambda: 1e-2,
            steps: 1000,
            learning_rate: None,
            seed: 0,
        }
    }
}

/// Largest eigenvalue of `[X 1]ᵀ[X 1] / n`.
fn second_moment_top_eigenvalue(x: &Matrix) -> f64 {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut v = vec![1.0; d + 1];
    normalize(&mut v);
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut w = vec![0.0; d + 1];
        for r in x.row_iter() {
            let s = dot(r, &v[..d]) + v[d];
            for (wk, xk) in w[..d].iter_mut().zip(r) {
                *wk += s * xk;
            }
            w[d] += s;
        }
        w.iter_mut().for_each(|a| *a /= n);
        let next = normalize(&mut w);
        if next == 0.0 {
            return 0.0;
        }
        let done = libm::fabs(next - lambda) <= 1e-9 * next;
        lambda = next;
        v = w;
        if done {
            break;
        }
    }
    lambda
}

pub fn train_logreg(x: &Matrix, labels: &[u8], hyper: &LogregHyper) -> Result<LinearProbe> {
    if labels.len() != x.rows() {
        return Err(Error::Labels(alloc::format!(
            "{} labels for {} rows",
            labels.len(),
            x.rows()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::TooFewRows { need: 1, got: 0 });
    }
    let n = x.rows() as f64;
    let d = x.cols();
    let lr = match hyper.learning_rate {
        Some(lr) => lr,
        None => 1.0 / (second_moment_top_eigenvalue(x) / 4.0 + hyper.l2_lambda).max(1e-12),
    };
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut grad = vec![0.0; d];
    let objective = |w: &[f64], b: f64| -> f64 {
        let mut total = 0.0;
        for (r, &y) in x.row_iter().zip(labels) {
            let z = dot(w, r) + b;
            // log(1 + e^z) - y z, computed stably.
            let softplus = if z > 0.0 {
                z + libm::log1p(libm::exp(-z))
            } else {
                libm::log1p(libm::exp(z))
            };
            total += softplus - f64::from(y) * z;
        }
        total / n + hyper.l2_lambda * dot(w, w) / 2.0
    };
    for _ in 0..hyper.steps {
        grad.iter_mut()
            .zip(&w)
            .for_each(|(g, wk)| *g = hyper.l2_lambda * wk);
        let mut grad_b = 0.0;
        for (r, &y) in x.row_iter().zip(labels) {
            let e = (sigmoid(dot(&w, r) + b) - f64::from(y)) / n;
            for (g, xk) in grad.iter_mut().zip(r) {
                *g += e * xk;
            }
            grad_b += e;
        }
        for (wk, g) in w.iter_mut().zip(&grad) {
            *wk -= lr * g;
        }
        b -= lr * grad_b;
    }
    let final_loss = objective(&w, b);
    if !final_loss.is_finite() {
        return Err(Error::Diverged);
    }
    Ok(LinearProbe {
        kind: ProbeKind::Logreg,
        w,
        b,
        flipped: false,
        final_loss,
        hyper: ProbeHyper::Logreg(hyper.clone()),
    })
}

/// Label 1 iff `sigmoid(w . x + b) > 0.5`; a flipped probe inverts.
pub fn logreg_predict(probe: &LinearProbe, x: &Matrix) -> Result<Predictions> {
    if x.cols() != probe.w.len() {
        return Err(Error::Shape(alloc::format!(
            "probe has d = {}, data has d = {}",
            probe.w.len(),
            x.cols()
        )));
    }
    let scores: Vec<f64> = x.row_iter().map(|r| probe.probability(r)).collect();
    let labels = scores
        .iter()
        .map(|&p| u8::from(p > 0.5) ^ u8::from(probe.flipped))
        .collect();
    Ok(Predictions { labels, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pair() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let probe = train_logreg(&x, &[1, 0], &LogregHyper::default()).unwrap();
        assert_eq!(logreg_predict(&probe, &x).unwrap().labels, vec![1, 0]);
    }

    #[test]
    fn uninformative_features_keep_zero_weights() {
        let x = Matrix::zeros(4, 3);
        let probe = train_logreg(&x, &[1, 0, 1, 0], &LogregHyper::default()).unwrap();
        assert!(probe.w.iter().all(|&w| w == 0.0));
        let pred = logreg_predict(&probe, &x).unwrap().labels;
        let correct = pred
            .iter()
            .zip([1, 0, 1, 0])
            .filter(|(a, b)| **a == *b)
            .count();
        assert_eq!(correct, 2);
    }

    #[test]
    fn label_count_must_match() {
        let x = Matrix::zeros(3, 1);
        assert!(train_logreg(&x, &[1, 0], &LogregHyper::default()).is_err());
    }
}
