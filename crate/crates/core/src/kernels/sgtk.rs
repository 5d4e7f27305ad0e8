//! Simplified graph neural tangent kernel: K-step covariance aggregation
//! followed by a single ReLU NTK update.

use nalgebra::DMatrix;

use super::{check_pair_inputs, PairKernel};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, propagate, propagate_covariance, Graph, NormalizedAdjacency, PropagationConfig};
use crate::primitives::{relu_value_and_deriv_raw, KernelHyperParams};

/// Cross-covariance between two graphs with both self-covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub cross: DMatrix<f64>,
    pub self1: DMatrix<f64>,
    pub self2: DMatrix<f64>,
}

impl CovarianceState {
    /// `Σ = X₁X₂ᵀ`, `Σ₁ = X₁X₁ᵀ`, `Σ₂ = X₂X₂ᵀ`.
    pub fn initial(g1: &Graph, g2: &Graph) -> Result<Self> {
        if g1.feature_dim() != g2.feature_dim() {
            return Err(Error::DimensionMismatch {
                context: "covariance init feature dimension",
                expected: g1.feature_dim(),
                actual: g2.feature_dim(),
            });
        }
        let (x1, x2) = (g1.features(), g2.features());
        Ok(Self {
            cross: x1 * x2.transpose(),
            self1: x1 * x1.transpose(),
            self2: x2 * x2.transpose(),
        })
    }

    /// Applies `K` aggregation steps to all three matrices.
    pub fn aggregated(
        &self,
        adj1: &NormalizedAdjacency,
        adj2: &NormalizedAdjacency,
        cfg: PropagationConfig,
    ) -> Result<Self> {
        Ok(Self {
            cross: propagate_covariance(adj1, adj2, &self.cross, cfg)?,
            self1: propagate_covariance(adj1, adj1, &self.self1, cfg)?,
            self2: propagate_covariance(adj2, adj2, &self.self2, cfg)?,
        })
    }

    /// Entrywise `m / d + β²` on all three matrices.
    pub fn scaled(mut self, d: usize, beta: f64) -> Self {
        let (inv_d, b2) = (1.0 / d as f64, beta * beta);
        for m in [&mut self.cross, &mut self.self1, &mut self.self2] {
            m.apply(|v| *v = *v * inv_d + b2);
        }
        self
    }
}

pub fn sgtk_pair(g1: &Graph, g2: &Graph, hp: &KernelHyperParams) -> Result<PairKernel> {
    check_pair_inputs(g1, g2, hp)?;
    let cfg = PropagationConfig::new(hp.k);
    let x1 = propagate(&normalize_adjacency(g1)?, g1.features(), cfg)?;
    let x2 = propagate(&normalize_adjacency(g2)?, g2.features(), cfg)?;
    let r1 = root_variances(&x1, hp);
    let r2 = root_variances(&x2, hp);
    let mut theta = node_kernel(&x1, &r1, &x2, &r2, hp);
    if std::ptr::eq(g1, g2) {
        super::mirror_upper(&mut theta);
    }
    Ok(PairKernel::new(theta, hp.readout))
}

/// `√(‖x̂ᵢ‖²/d + β²)` per row of the propagated features.
pub(crate) fn root_variances(x: &DMatrix<f64>, hp: &KernelHyperParams) -> Vec<f64> {
    let inv_d = 1.0 / x.ncols() as f64;
    let b2 = hp.beta * hp.beta;
    x.row_iter()
        .map(|r| (r.norm_squared() * inv_d + b2).sqrt())
        .collect()
}

/// `Θ = Σ̂⁰ ⊙ Σ̇ + Σ̂¹` from propagated features and their root variances.
///
/// The aggregated covariance factorizes as `Â₁^K X₁ (Â₂^K X₂)ᵀ`, so it is
/// formed directly from propagated features rather than by aggregating the
/// initial `n × m` covariance.
pub(crate) fn node_kernel(
    x1: &DMatrix<f64>,
    r1: &[f64],
    x2: &DMatrix<f64>,
    r2: &[f64],
    hp: &KernelHyperParams,
) -> DMatrix<f64> {
    let inv_d = 1.0 / x1.ncols() as f64;
    let b2 = hp.beta * hp.beta;
    let mut m = x1 * x2.transpose();
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let rj = r2[j];
        for (i, v) in col.iter_mut().enumerate() {
            let s0 = *v * inv_d + b2;
            let (value, deriv) = relu_value_and_deriv_raw(r1[i] * rj, s0);
            *v = s0 * deriv + value + b2;
        }
    }
    m
}
