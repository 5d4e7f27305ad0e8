//! Simplified graph neural kernel: the arcsine kernel of an infinite-width
//! erf layer evaluated on K-step propagated features.

use nalgebra::DMatrix;

use super::{check_pair_inputs, PairKernel};
use crate::error::Result;
use crate::graph::{normalize_adjacency, propagate, Graph, PropagationConfig};
use crate::primitives::{erf_value_raw, KernelHyperParams};

pub fn sgnk_pair(g1: &Graph, g2: &Graph, hp: &KernelHyperParams) -> Result<PairKernel> {
    check_pair_inputs(g1, g2, hp)?;
    let cfg = PropagationConfig::new(hp.k);
    let x1 = propagate(&normalize_adjacency(g1)?, g1.features(), cfg)?;
    let x2 = propagate(&normalize_adjacency(g2)?, g2.features(), cfg)?;
    let s1 = inv_scales(&x1, hp);
    let s2 = inv_scales(&x2, hp);
    let mut theta = node_kernel(&x1, &s1, &x2, &s2, hp);
    if std::ptr::eq(g1, g2) {
        super::mirror_upper(&mut theta);
    }
    Ok(PairKernel::new(theta, hp.readout))
}

/// `1/√(1 + 2 x̃ᵢᵀΣ_w x̃ᵢ)` per row, with the augmented coordinate folded in.
pub(crate) fn inv_scales(x: &DMatrix<f64>, hp: &KernelHyperParams) -> Vec<f64> {
    let b2 = hp.sigma_b * hp.sigma_b;
    x.row_iter()
        .map(|r| 1.0 / (1.0 + 2.0 * (r.norm_squared() + b2)).sqrt())
        .collect()
}

/// Entrywise arcsine kernel over all row pairs of `x1` and `x2`.
pub(crate) fn node_kernel(
    x1: &DMatrix<f64>,
    s1: &[f64],
    x2: &DMatrix<f64>,
    s2: &[f64],
    hp: &KernelHyperParams,
) -> DMatrix<f64> {
    let b2 = hp.sigma_b * hp.sigma_b;
    let shift = if hp.sgnk_add_beta { hp.beta * hp.beta } else { 0.0 };
    let mut m = x1 * x2.transpose();
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let sj = s2[j];
        for (i, v) in col.iter_mut().enumerate() {
            *v = erf_value_raw(s1[i], sj, *v + b2) + shift;
        }
    }
    m
}
