//! Principal components by power iteration with deflation.

use alloc::vec;
use alloc::vec::Vec;

use super::{DirectionProbe, SignConvention};
use crate::error::{Error, Result};
use crate::linalg::{axpy, canonical_sign, dot, normalize, Matrix};

/// Iteration stops once successive unit directions differ by less than this.
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITERS: usize = 10_000;

/// Eigenvalues below this fraction of the total variance count as zero.
const RANK_TOL: f64 = 1e-12;

/// Symmetric PSD operator whose leading eigenvectors give the principal
/// axes: the d x d covariance when d <= n, otherwise the n x n Gram matrix of
/// the centred rows (mapped back through `Xcᵀ`).
struct Operator {
    centred: Matrix,
    sym: Matrix,
    via_gram: bool,
}

impl Operator {
    fn new(x: &Matrix) -> Self {
        let centred = x.centered();
        let via_gram = x.cols() > x.rows();
        let sym = if via_gram {
            let n = x.rows();
            let mut g = Matrix::zeros(n, n);
            for a in 0..n {
                for b in a..n {
                    let v = dot(centred.row(a), centred.row(b)) / n as f64;
                    g.set(a, b, v);
                    g.set(b, a, v);
                }
            }
            g
        } else {
            centred.gram_over_rows()
        };
        Self {
            centred,
            sym,
            via_gram,
        }
    }

    fn trace(&self) -> f64 {
        (0..self.sym.rows()).map(|i| self.sym.get(i, i)).sum()
    }

    /// Unit eigenvector in operator space orthogonal to `found`, with its
    /// eigenvalue. Returns `None` when nothing non-negligible is left.
    fn next_eigenvector(&self, found: &[Vec<f64>]) -> Option<(Vec<f64>, f64)> {
        let dim = self.sym.rows();
        let floor = RANK_TOL * self.trace();
        let deflate = |v: &mut [f64]| {
            for u in found {
                let c = dot(v, u);
                axpy(-c, u, v);
            }
        };
        let rayleigh = |v: &[f64]| dot(v, &self.sym.mul_vec(v));

        let mut v = vec![1.0; dim];
        deflate(&mut v);
        if normalize(&mut v) == 0.0 || rayleigh(&v) <= floor {
            // Restart from the coordinate axis with the most remaining variance.
            let mut best: Option<(f64, Vec<f64>)> = None;
            for i in 0..dim {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                deflate(&mut e);
                if normalize(&mut e) == 0.0 {
                    continue;
                }
                let r = rayleigh(&e);
                if best.as_ref().is_none_or(|(br, _)| r > *br) {
                    best = Some((r, e));
                }
            }
            v = best?.1;
        }

        let mut lambda = 0.0;
        for _ in 0..POWER_MAX_ITERS {
            let mut w = self.sym.mul_vec(&v);
            deflate(&mut w);
            lambda = normalize(&mut w);
            if lambda <= floor {
                return None;
            }
            let delta: f64 = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            v = w;
            if libm::sqrt(delta) < POWER_TOL {
                break;
            }
        }
        Some((v, lambda))
    }

    /// Maps an operator-space eigenvector to a unit principal axis.
    fn to_axis(&self, v: &[f64]) -> Vec<f64> {
        if !self.via_gram {
            return v.to_vec();
        }
        let mut u = vec![0.0; self.centred.cols()];
        for (i, &c) in v.iter().enumerate() {
            axpy(c, self.centred.row(i), &mut u);
        }
        normalize(&mut u);
        u
    }
}

/// Leading principal components of a data matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// Unit principal axes, strongest first.
    pub components: Vec<Vec<f64>>,
    /// Variance along each axis.
    pub eigenvalues: Vec<f64>,
    /// Centred data projected onto the axes (n x components).
    pub projections: Matrix,
    /// Sum of per-column variances.
    pub total_variance: f64,
    /// True when fewer than the requested components exist.
    pub rank_deficient: bool,
}

/// Top principal component of `x` (rows are observations).
pub fn top_principal_component(x: &Matrix) -> Result<DirectionProbe> {
    if x.rows() < 2 {
        return Err(Error::TooFewRows {
            need: 2,
            got: x.rows(),
        });
    }
    let pca = pca_top_k(x, 1)?;
    let u = pca.components.into_iter().next().ok_or(Error::RankZero)?;
    Ok(DirectionProbe {
        u,
        flipped: false,
        sign_convention: SignConvention::LargestEntryPositive,
        eigenvalue: pca.eigenvalues[0],
    })
}

/// First `k` principal components by repeated power iteration, each run
/// restricted to the orthogonal complement of the axes already found.
pub fn pca_top_k(x: &Matrix, k: usize) -> Result<Pca> {
    if x.rows() < k.max(1) {
        return Err(Error::TooFewRows {
            need: k.max(1),
            got: x.rows(),
        });
    }
    if let Some((row, col)) = x.first_non_finite() {
        return Err(Error::NonFinite {
            what: "pca input",
            row,
            col,
        });
    }
    let op = Operator::new(x);
    let total_variance = op.trace();
    if total_variance.is_nan() || total_variance <= 0.0 {
        return Err(Error::RankZero);
    }
    let mut found: Vec<Vec<f64>> = Vec::new();
    let mut components: Vec<Vec<f64>> = Vec::new();
    let mut eigenvalues = Vec::new();
    while components.len() < k {
        let Some((v, lambda)) = op.next_eigenvector(&found) else {
            break;
        };
        let mut u = op.to_axis(&v);
        for prev in &components {
            let c = dot(&u, prev);
            axpy(-c, prev, &mut u);
        }
        normalize(&mut u);
        canonical_sign(&mut u);
        found.push(v);
        components.push(u);
        eigenvalues.push(lambda);
    }
    if components.is_empty() {
        return Err(Error::RankZero);
    }
    let mut projections = Matrix::zeros(x.rows(), components.len());
    for i in 0..x.rows() {
        for (c, u) in components.iter().enumerate() {
            projections.set(i, c, dot(op.centred.row(i), u));
        }
    }
    Ok(Pca {
        rank_deficient: components.len() < k,
        components,
        eigenvalues,
        projections,
        total_variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_aligned_rows() {
        let x = Matrix::from_rows(&[[3.0, 0.0], [-3.0, 0.0]]).unwrap();
        let p = top_principal_component(&x).unwrap();
        assert!((p.u[0] - 1.0).abs() < 1e-12 && p.u[1].abs() < 1e-12);
    }

    #[test]
    fn diagonal_rows() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [-1.0, -1.0]]).unwrap();
        let p = top_principal_component(&x).unwrap();
        let s = 1.0 / libm::sqrt(2.0);
        assert!((p.u[0] - s).abs() < 1e-12 && (p.u[1] - s).abs() < 1e-12);
    }

    #[test]
    fn start_orthogonal_to_top_axis_restarts() {
        // The all-ones start is orthogonal to (1, -1).
        let x = Matrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let p = top_principal_component(&x).unwrap();
        let s = 1.0 / libm::sqrt(2.0);
        assert!((p.u[0] - s).abs() < 1e-12 && (p.u[1] + s).abs() < 1e-12);
    }

    #[test]
    fn identical_rows_have_rank_zero() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        assert_eq!(top_principal_component(&x), Err(Error::RankZero));
    }

    #[test]
    fn wide_input_uses_gram_route() {
        // d > n: principal axis of two points is their difference.
        let x = Matrix::from_rows(&[[1.0, 2.0, 3.0, 4.0], [-1.0, -2.0, -3.0, -4.0]]).unwrap();
        let p = top_principal_component(&x).unwrap();
        let norm = libm::sqrt(30.0);
        for (a, b) in p.u.iter().zip([1.0, 2.0, 3.0, 4.0]) {
            assert!((a - b / norm).abs() < 1e-12);
        }
        let pca = pca_top_k(&x, 2).unwrap();
        assert!(pca.rank_deficient);
        assert_eq!(pca.components.len(), 1);
    }
}
