//! Closed-form Gaussian expectations of activations and their derivatives.
//!
//! For `(u, v) ~ N(0, [[sii, sij], [sij, sjj]])` this module evaluates
//! `E[ψ(u)ψ(v)]` and `E[ψ'(u)ψ'(v)]` for ReLU (arc-cosine forms) and erf
//! (arcsine forms), plus a seeded Monte-Carlo estimator used to cross-check
//! the closed forms.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Products `sii·sjj` below this are treated as a degenerate (a.s. zero) variable.
const ZERO_VARIANCE: f64 = 1e-300;

/// Correlations within this of `±1` are snapped to `±1`. `acos` has unbounded
/// slope there, so a few ulps of rounding in `sij` or `norm` would otherwise
/// surface as angles near `1e-8` and break permutation invariance.
const PARALLEL_SNAP: f64 = 64.0 * f64::EPSILON;

#[inline]
fn correlation(norm: f64, sij: f64) -> f64 {
    let lambda = (sij / norm).clamp(-1.0, 1.0);
    if 1.0 - lambda.abs() <= PARALLEL_SNAP {
        lambda.signum()
    } else {
        lambda
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Erf,
}

/// How node-pair kernel entries are reduced to a graph-pair value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    #[default]
    Sum,
    Mean,
}

/// Every scalar hyperparameter consumed by the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperParams {
    /// Propagation steps.
    pub k: usize,
    /// Bias-influence coefficient; enters as `+ β²`.
    pub beta: f64,
    /// Bias standard deviation of the augmented coordinate (SGNK).
    pub sigma_b: f64,
    pub activation: ActivationKind,
    /// Aggregate-then-NTK blocks of the GNTK baseline.
    pub gntk_blocks: usize,
    /// Adds `β²` after the arcsine in SGNK. Off by default.
    pub sgnk_add_beta: bool,
    pub readout: Readout,
}

impl Default for KernelHyperParams {
    fn default() -> Self {
        Self {
            k: 2,
            beta: 1.0,
            sigma_b: 1.0,
            activation: ActivationKind::Relu,
            gntk_blocks: 1,
            sgnk_add_beta: false,
            readout: Readout::Sum,
        }
    }
}

impl KernelHyperParams {
    pub fn sgtk(k: usize, beta: f64) -> Self {
        Self {
            k,
            beta,
            ..Self::default()
        }
    }

    pub fn sgnk(k: usize) -> Self {
        Self {
            k,
            activation: ActivationKind::Erf,
            ..Self::default()
        }
    }

    pub fn gntk(blocks: usize) -> Self {
        Self {
            gntk_blocks: blocks,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidHyperParams(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if !(self.sigma_b > 0.0 && self.sigma_b.is_finite()) {
            return Err(Error::InvalidHyperParams(format!(
                "sigma_b must be finite and > 0, got {}",
                self.sigma_b
            )));
        }
        if self.gntk_blocks == 0 {
            return Err(Error::InvalidHyperParams("gntk_blocks must be >= 1".into()));
        }
        Ok(())
    }
}

/// Entries of a 2×2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovTriple {
    pub sii: f64,
    pub sjj: f64,
    pub sij: f64,
}

impl CovTriple {
    pub fn new(sii: f64, sjj: f64, sij: f64) -> Result<Self> {
        let c = Self { sii, sjj, sij };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { sii, sjj, sij } = *self;
        let finite = sii.is_finite() && sjj.is_finite() && sij.is_finite();
        let bound = sii * sjj;
        if !finite || sii < 0.0 || sjj < 0.0 || sij * sij > bound * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::InvalidCovariance { sii, sjj, sij });
        }
        Ok(())
    }

    /// `(√(sii·sjj), λ)` with `λ` clamped to `[-1, 1]`; `None` for zero variance.
    fn scale_and_correlation(&self) -> Option<(f64, f64)> {
        let prod = self.sii * self.sjj;
        if prod < ZERO_VARIANCE {
            return None;
        }
        let norm = prod.sqrt();
        Some((norm, correlation(norm, self.sij)))
    }
}

/// `E[ReLU(u)·ReLU(v)]`, given `norm = √(sii·sjj)` and the raw cross term.
#[inline]
pub(crate) fn relu_value_raw(norm: f64, sij: f64) -> f64 {
    if norm * norm < ZERO_VARIANCE {
        return 0.0;
    }
    let lambda = correlation(norm, sij);
    let theta = lambda.acos();
    let sin = (1.0 - lambda * lambda).max(0.0).sqrt();
    norm / (2.0 * PI) * (sin + (PI - theta) * lambda)
}

/// `E[1{u>0}·1{v>0}]`, same parameterization as [`relu_value_raw`].
#[inline]
pub(crate) fn relu_deriv_raw(norm: f64, sij: f64) -> f64 {
    if norm * norm < ZERO_VARIANCE {
        return 0.0;
    }
    let lambda = correlation(norm, sij);
    (PI - lambda.acos()) / (2.0 * PI)
}

/// Both ReLU expectations sharing one `acos`.
#[inline]
pub(crate) fn relu_value_and_deriv_raw(norm: f64, sij: f64) -> (f64, f64) {
    if norm * norm < ZERO_VARIANCE {
        return (0.0, 0.0);
    }
    let lambda = correlation(norm, sij);
    let rest = PI - lambda.acos();
    let sin = (1.0 - lambda * lambda).max(0.0).sqrt();
    (norm / (2.0 * PI) * (sin + rest * lambda), rest / (2.0 * PI))
}

/// `E[erf(u)·erf(v)]` from `1/√(1+2sii)`, `1/√(1+2sjj)` and the cross term.
#[inline]
pub(crate) fn erf_value_raw(inv_i: f64, inv_j: f64, sij: f64) -> f64 {
    (2.0 / PI) * (2.0 * sij * (inv_i * inv_j)).clamp(-1.0, 1.0).asin()
}

#[inline]
pub(crate) fn erf_deriv_raw(sii: f64, sjj: f64, sij: f64) -> f64 {
    let det = (1.0 + 2.0 * sii) * (1.0 + 2.0 * sjj) - 4.0 * sij * sij;
    (4.0 / PI) / det.max(f64::MIN_POSITIVE).sqrt()
}

pub fn relu_pair_expectation(c: CovTriple) -> Result<f64> {
    c.validate()?;
    Ok(match c.scale_and_correlation() {
        Some((norm, _)) => relu_value_raw(norm, c.sij),
        None => 0.0,
    })
}

pub fn relu_deriv_expectation(c: CovTriple) -> Result<f64> {
    c.validate()?;
    Ok(match c.scale_and_correlation() {
        Some((norm, _)) => relu_deriv_raw(norm, c.sij),
        None => 0.0,
    })
}

pub fn erf_pair_expectation(c: CovTriple) -> Result<f64> {
    c.validate()?;
    let inv_i = 1.0 / (1.0 + 2.0 * c.sii).sqrt();
    let inv_j = 1.0 / (1.0 + 2.0 * c.sjj).sqrt();
    Ok(erf_value_raw(inv_i, inv_j, c.sij))
}

pub fn erf_deriv_expectation(c: CovTriple) -> Result<f64> {
    c.validate()?;
    Ok(erf_deriv_raw(c.sii, c.sjj, c.sij))
}

pub fn pair_expectation(activation: ActivationKind, c: CovTriple) -> Result<f64> {
    match activation {
        ActivationKind::Relu => relu_pair_expectation(c),
        ActivationKind::Erf => erf_pair_expectation(c),
    }
}

pub fn deriv_expectation(activation: ActivationKind, c: CovTriple) -> Result<f64> {
    match activation {
        ActivationKind::Relu => relu_deriv_expectation(c),
        ActivationKind::Erf => erf_deriv_expectation(c),
    }
}

/// Arcsine kernel of an infinite-width erf layer on augmented inputs
/// `x̃ = (x, 1)` with weight covariance `diag(1, …, 1, σ_b²)`.
pub fn erf_pair_kernel(xi: &[f64], xj: &[f64], hp: &KernelHyperParams) -> Result<f64> {
    if xi.len() != xj.len() {
        return Err(Error::DimensionMismatch {
            context: "erf_pair_kernel",
            expected: xi.len(),
            actual: xj.len(),
        });
    }
    let bias = hp.sigma_b * hp.sigma_b;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() + bias;
    let c = CovTriple {
        sii: dot(xi, xi),
        sjj: dot(xj, xj),
        sij: dot(xi, xj),
    };
    let mut value = erf_pair_expectation(c)?;
    if hp.sgnk_add_beta {
        value += hp.beta * hp.beta;
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Value,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl McEstimate {
    /// Distance to `exact` in standard errors.
    pub fn z_score(&self, exact: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == exact {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - exact).abs() / self.stderr
        }
    }
}

/// Monte-Carlo estimate of the same expectations, by sampling the bivariate
/// normal directly. Deterministic for a given seed.
pub fn mc_activation_oracle(
    c: CovTriple,
    activation: ActivationKind,
    mode: OracleMode,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    c.validate()?;
    if samples < 10_000 {
        return Err(Error::InvalidHyperParams(format!(
            "Monte-Carlo oracle needs at least 10^4 samples, got {samples}"
        )));
    }
    let a = c.sii.sqrt();
    let b = if a > 0.0 { c.sij / a } else { 0.0 };
    let r = (c.sjj - b * b).max(0.0).sqrt();
    let f: fn(f64) -> f64 = match (activation, mode) {
        (ActivationKind::Relu, OracleMode::Value) => |x| x.max(0.0),
        (ActivationKind::Relu, OracleMode::Derivative) => |x| if x > 0.0 { 1.0 } else { 0.0 },
        (ActivationKind::Erf, OracleMode::Value) => libm::erf,
        (ActivationKind::Erf, OracleMode::Derivative) => {
            |x| 2.0 / PI.sqrt() * (-x * x).exp()
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
    for _ in 0..samples {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let y = f(a * z1) * f(b * z1 + r * z2);
        sum += y;
        sum_sq += y * y;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        stderr: (var / n).sqrt(),
    })
}
