//! Soft-margin SVM on a precomputed kernel, solved in the dual by sequential
//! minimal optimization with second-order working-set selection.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::krr::log_grid;
use super::labels::LabelVector;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub c_grid: Vec<f64>,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    /// Iteration budget in units of the training-set size.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            c_grid: log_grid(-2.0, 4.0, 7),
            tol: 1e-3,
            max_passes: 2000,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if std::iter::once(&self.c)
            .chain(&self.c_grid)
            .any(|&c| !(c > 0.0 && c.is_finite()))
        {
            return Err(Error::InvalidHyperParams("SVM C must be finite and > 0".into()));
        }
        if !(self.tol > 0.0) || self.max_passes == 0 {
            return Err(Error::InvalidHyperParams(
                "SVM tol must be > 0 and max_passes >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_c(&self, c: f64) -> Self {
        Self { c, ..self.clone() }
    }
}

/// One binary machine: `f(x) = Σ coef_i K(x, x_i) − rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySvm {
    /// `y_i α_i` for every training item (zero off the support).
    pub coef: Vec<f64>,
    pub rho: f64,
    pub support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    /// Maximal KKT violation at exit.
    pub kkt_violation: f64,
    /// Dual objective `Σα − ½αᵀQα` recorded after every `p` iterations and at exit.
    pub objective_trace: Vec<f64>,
}

impl BinarySvm {
    /// Trains on `y_i ∈ {+1, −1}`.
    pub fn fit(gram: &DMatrix<f64>, y: &[f64], cfg: &SvmConfig) -> Result<Self> {
        let p = y.len();
        if gram.nrows() != p || gram.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "SVM Gram vs labels",
                expected: p,
                actual: gram.nrows(),
            });
        }
        if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
            return Err(Error::InvalidLabels(
                "binary SVM subproblem has a single class".into(),
            ));
        }
        let c = cfg.c;
        let q = |i: usize, j: usize| y[i] * y[j] * gram[(i, j)];
        let mut alpha = vec![0.0; p];
        let mut grad = vec![-1.0; p];
        let max_iter = cfg.max_passes.saturating_mul(p.max(1));
        let mut trace = Vec::new();
        let mut iterations = 0;
        let dual = |alpha: &[f64], grad: &[f64]| -> f64 {
            alpha.iter().zip(grad).map(|(a, g)| 0.5 * a * (1.0 - g)).sum()
        };

        let (converged, kkt_violation) = loop {
            let up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
            let low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c);

            let mut gmax = f64::NEG_INFINITY;
            let mut i = usize::MAX;
            for t in 0..p {
                if up(t, &alpha) && -y[t] * grad[t] > gmax {
                    gmax = -y[t] * grad[t];
                    i = t;
                }
            }
            let mut gmax2 = f64::NEG_INFINITY;
            let mut j = usize::MAX;
            let mut best = f64::INFINITY;
            for t in 0..p {
                if !low(t, &alpha) {
                    continue;
                }
                gmax2 = gmax2.max(y[t] * grad[t]);
                if i == usize::MAX {
                    continue;
                }
                let b = gmax + y[t] * grad[t];
                if b > 0.0 {
                    let mut a = gram[(i, i)] + gram[(t, t)] - 2.0 * gram[(i, t)];
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let score = -(b * b) / a;
                    if score < best {
                        best = score;
                        j = t;
                    }
                }
            }
            let violation = gmax + gmax2;
            if i == usize::MAX || j == usize::MAX || violation < cfg.tol {
                break (true, violation.max(0.0));
            }
            if iterations >= max_iter {
                break (false, violation);
            }
            iterations += 1;

            let (old_i, old_j) = (alpha[i], alpha[j]);
            if y[i] != y[j] {
                let mut quad = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let mut quad = gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)];
                if quad <= 0.0 {
                    quad = TAU;
                }
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..p {
                grad[t] += q(t, i) * di + q(t, j) * dj;
            }
            if iterations % p.max(1) == 0 {
                trace.push(dual(&alpha, &grad));
            }
        };
        trace.push(dual(&alpha, &grad));
        if !converged {
            log::warn!(
                "SMO stopped after {iterations} iterations without converging; KKT violation {kkt_violation:e}"
            );
        }

        let rho = {
            let (mut sum, mut free) = (0.0, 0usize);
            let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
            for t in 0..p {
                let yg = y[t] * grad[t];
                if alpha[t] > 0.0 && alpha[t] < c {
                    sum += yg;
                    free += 1;
                } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            }
            if free > 0 {
                sum / free as f64
            } else {
                (ub + lb) / 2.0
            }
        };
        let coef: Vec<f64> = alpha.iter().zip(y).map(|(a, yy)| a * yy).collect();
        let support = (0..p).filter(|&t| alpha[t] > 0.0).collect();
        Ok(Self {
            coef,
            rho,
            support,
            iterations,
            converged,
            kkt_violation,
            objective_trace: trace,
        })
    }

    /// Decision value of each query row of `cross` (q × p).
    pub fn decision(&self, cross: &DMatrix<f64>) -> Vec<f64> {
        (0..cross.nrows())
            .map(|r| {
                let mut acc = 0.0;
                for &s in &self.support {
                    acc += self.coef[s] * cross[(r, s)];
                }
                acc - self.rho
            })
            .collect()
    }

    pub fn dual_objective(&self) -> f64 {
        *self.objective_trace.last().unwrap()
    }
}

/// Binary problems use one machine (class 1 positive); more classes use
/// one-vs-rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub num_classes: usize,
    pub machines: Vec<BinarySvm>,
}

pub fn svm_fit(train_gram: &DMatrix<f64>, train_labels: &LabelVector, cfg: &SvmConfig) -> Result<SvmModel> {
    cfg.validate()?;
    train_labels.require_two_classes()?;
    if train_gram.nrows() != train_labels.len() {
        return Err(Error::DimensionMismatch {
            context: "SVM Gram vs labels",
            expected: train_labels.len(),
            actual: train_gram.nrows(),
        });
    }
    let k = train_labels.num_classes();
    let signs = |c: usize| -> Vec<f64> {
        train_labels
            .labels()
            .iter()
            .map(|&l| if l == c { 1.0 } else { -1.0 })
            .collect()
    };
    let machines = if k == 2 {
        vec![BinarySvm::fit(train_gram, &signs(1), cfg)?]
    } else {
        (0..k)
            .map(|c| BinarySvm::fit(train_gram, &signs(c), cfg))
            .collect::<Result<Vec<_>>>()?
    };
    Ok(SvmModel {
        num_classes: k,
        machines,
    })
}

impl SvmModel {
    /// Per-class decision values (q × num_classes).
    pub fn decision_values(&self, cross: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let p = self.machines[0].coef.len();
        if cross.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "SVM cross Gram columns vs training items",
                expected: p,
                actual: cross.ncols(),
            });
        }
        let q = cross.nrows();
        let mut out = DMatrix::zeros(q, self.num_classes);
        if self.num_classes == 2 {
            for (r, f) in self.machines[0].decision(cross).into_iter().enumerate() {
                out[(r, 0)] = -f;
                out[(r, 1)] = f;
            }
        } else {
            for (c, m) in self.machines.iter().enumerate() {
                for (r, f) in m.decision(cross).into_iter().enumerate() {
                    out[(r, c)] = f;
                }
            }
        }
        Ok(out)
    }

    /// Highest decision value wins; ties go to the smaller class id.
    pub fn predict(&self, cross: &DMatrix<f64>) -> Result<Vec<usize>> {
        Ok(super::krr::argmax_rows(&self.decision_values(cross)?))
    }
}
