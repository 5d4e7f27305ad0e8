//! Multiclass kernel ridge regression on one-hot targets.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::labels::LabelVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    pub lambda: f64,
    pub lambda_grid: Vec<f64>,
}

impl Default for RidgeConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lambda_grid: log_grid(-2.0, 2.0, 9),
        }
    }
}

impl RidgeConfig {
    pub fn validate(&self) -> Result<()> {
        if std::iter::once(&self.lambda)
            .chain(&self.lambda_grid)
            .any(|&l| !(l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidHyperParams(
                "ridge parameters must be finite and > 0".into(),
            ));
        }
        Ok(())
    }
}

/// `count` points spaced evenly in log10 between `10^lo` and `10^hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![10f64.powf(lo)],
        _ => (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Dual coefficients `α = (K + λI)⁻¹ Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrrModel {
    pub alpha: DMatrix<f64>,
}

impl KrrModel {
    pub fn fit(train_gram: &DMatrix<f64>, labels: &LabelVector, lambda: f64) -> Result<Self> {
        let t = train_gram.nrows();
        if t == 0 {
            return Err(Error::EmptyInput("empty training Gram matrix"));
        }
        if train_gram.ncols() != t {
            return Err(Error::DimensionMismatch {
                context: "KRR training Gram must be square",
                expected: t,
                actual: train_gram.ncols(),
            });
        }
        if labels.len() != t {
            return Err(Error::DimensionMismatch {
                context: "KRR labels vs training Gram",
                expected: t,
                actual: labels.len(),
            });
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidHyperParams(format!("lambda must be > 0, got {lambda}")));
        }
        let mut y = DMatrix::zeros(t, labels.num_classes());
        for (i, &l) in labels.labels().iter().enumerate() {
            y[(i, l)] = 1.0;
        }
        let mut a = train_gram.clone();
        for i in 0..t {
            a[(i, i)] += lambda;
        }
        let chol = match Cholesky::new(a.clone()) {
            Some(c) => c,
            None => {
                let jitter = 1e-10 * a.trace().abs() / t as f64;
                log::warn!("KRR factorization failed; retrying with diagonal jitter {jitter:e}");
                let mut b = a.clone();
                for i in 0..t {
                    b[(i, i)] += jitter;
                }
                Cholesky::new(b).ok_or_else(|| Error::NotPositiveDefinite {
                    min_eigenvalue: min_eigenvalue(&a),
                })?
            }
        };
        Ok(Self {
            alpha: chol.solve(&y),
        })
    }

    /// Class scores `cross · α`, one row per query item.
    pub fn scores(&self, cross_gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if cross_gram.ncols() != self.alpha.nrows() {
            return Err(Error::DimensionMismatch {
                context: "KRR cross Gram columns vs training items",
                expected: self.alpha.nrows(),
                actual: cross_gram.ncols(),
            });
        }
        Ok(cross_gram * &self.alpha)
    }

    pub fn predict(&self, cross_gram: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.scores(cross_gram)?))
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Row-wise argmax; ties go to the smaller column index.
pub fn argmax_rows(scores: &DMatrix<f64>) -> Vec<usize> {
    scores
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Fits on the training block with `cfg.lambda` and labels the query rows.
pub fn krr_fit_predict(
    train_gram: &DMatrix<f64>,
    train_labels: &LabelVector,
    cross_gram: &DMatrix<f64>,
    cfg: &RidgeConfig,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    KrrModel::fit(train_gram, train_labels, cfg.lambda)?.predict(cross_gram)
}
