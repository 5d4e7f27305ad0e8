//! Reference GNTK: `L` blocks of sum aggregation (scaled by per-node
//! coefficients `cᵢ`) each followed by one ReLU NTK iteration.

use nalgebra::DMatrix;

use super::{check_pair_inputs, PairKernel};
use crate::error::Result;
use crate::graph::{CsrMatrix, Graph};
use crate::primitives::{relu_value_and_deriv_raw, relu_value_raw, KernelHyperParams};

/// Per-graph quantities that do not depend on the partner graph.
#[derive(Debug, Clone)]
pub(crate) struct GntkSide {
    adj: CsrMatrix,
    scale: Vec<f64>,
    /// `C Ã X`: block-one aggregation applied to the features directly, so the
    /// first covariance is a plain Gram of these rows instead of a sum of
    /// mixed-sign products (which loses accuracy for near-parallel pairs).
    hidden: DMatrix<f64>,
    /// `√diag` of the aggregated self-covariance at the start of each block.
    roots: Vec<Vec<f64>>,
}

impl GntkSide {
    pub(crate) fn new(g: &Graph, blocks: usize) -> Self {
        let adj = CsrMatrix::augmented_adjacency(g);
        let mut hidden = sum_neighbors(&adj, g.features());
        let scale: Vec<f64> = hidden
            .row_iter()
            .map(|r| {
                let norm = r.norm();
                if norm > 1e-150 {
                    1.0 / norm
                } else {
                    1.0
                }
            })
            .collect();
        for (mut row, &c) in hidden.row_iter_mut().zip(&scale) {
            row *= c;
        }
        let mut sigma = &hidden * hidden.transpose();
        let mut roots = Vec::with_capacity(blocks);
        for b in 0..blocks {
            if b > 0 {
                sigma = aggregate(&adj, &scale, &adj, &scale, &sigma);
            }
            let r: Vec<f64> = sigma.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect();
            if b + 1 < blocks {
                let n = r.len();
                let mut next = DMatrix::zeros(n, n);
                for j in 0..n {
                    for i in 0..n {
                        next[(i, j)] = relu_value_raw(r[i] * r[j], sigma[(i, j)]);
                    }
                }
                sigma = next;
            }
            roots.push(r);
        }
        Self {
            adj,
            scale,
            hidden,
            roots,
        }
    }

    pub(crate) fn blocks(&self) -> usize {
        self.roots.len()
    }
}

/// `m · Ã` (`Ã` symmetric) with every output entry accumulated as a
/// compensated sum. Aggregation terms are exact (unit weights), so the
/// compensated sums are effectively correctly rounded and do not depend on
/// neighbor order. Plain sums leave order-dependent noise that `acos`
/// amplifies to ~1e-9 for near-parallel pairs.
fn sum_neighbors_right(m: &DMatrix<f64>, a: &CsrMatrix) -> DMatrix<f64> {
    let rows = m.nrows();
    let mut out = DMatrix::zeros(rows, a.dim());
    if rows == 0 {
        return out;
    }
    let mut carry = vec![0.0; rows];
    let src_all = m.as_slice();
    for (j, dst) in out.as_mut_slice().chunks_exact_mut(rows).enumerate() {
        carry.iter_mut().for_each(|c| *c = 0.0);
        for (l, w) in a.row(j) {
            let src = &src_all[l * rows..(l + 1) * rows];
            for ((s, c), &x) in dst.iter_mut().zip(carry.iter_mut()).zip(src.iter()) {
                // Knuth's TwoSum: `t + err == s + w·x` exactly
                let x = w * x;
                let t = *s + x;
                let z = t - *s;
                *c += (*s - (t - z)) + (x - z);
                *s = t;
            }
        }
        for (s, c) in dst.iter_mut().zip(&carry) {
            *s += c;
        }
    }
    out
}

/// `Ã · m` with compensated sums.
fn sum_neighbors(a: &CsrMatrix, m: &DMatrix<f64>) -> DMatrix<f64> {
    sum_neighbors_right(&m.transpose(), a).transpose()
}

/// `C₁ Ã₁ M Ã₂ᵀ C₂`.
fn aggregate(a1: &CsrMatrix, c1: &[f64], a2: &CsrMatrix, c2: &[f64], m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = sum_neighbors(a1, &sum_neighbors_right(m, a2));
    for (j, &cj) in c2.iter().enumerate() {
        for (v, &ci) in out.column_mut(j).iter_mut().zip(c1) {
            *v *= ci * cj;
        }
    }
    out
}

pub(crate) fn node_kernel(s1: &GntkSide, s2: &GntkSide) -> DMatrix<f64> {
    debug_assert_eq!(s1.blocks(), s2.blocks());
    let mut sigma = &s1.hidden * s2.hidden.transpose();
    let mut theta = sigma.clone();
    for b in 0..s1.blocks() {
        if b > 0 {
            sigma = aggregate(&s1.adj, &s1.scale, &s2.adj, &s2.scale, &sigma);
            theta = aggregate(&s1.adj, &s1.scale, &s2.adj, &s2.scale, &theta);
        }
        let (r1, r2) = (&s1.roots[b], &s2.roots[b]);
        for j in 0..sigma.ncols() {
            for i in 0..sigma.nrows() {
                let (value, deriv) = relu_value_and_deriv_raw(r1[i] * r2[j], sigma[(i, j)]);
                theta[(i, j)] = theta[(i, j)] * deriv + value;
                sigma[(i, j)] = value;
            }
        }
    }
    theta
}

pub fn gntk_pair(g1: &Graph, g2: &Graph, hp: &KernelHyperParams) -> Result<PairKernel> {
    check_pair_inputs(g1, g2, hp)?;
    let s1 = GntkSide::new(g1, hp.gntk_blocks);
    let s2 = GntkSide::new(g2, hp.gntk_blocks);
    Ok(PairKernel::new(node_kernel(&s1, &s2), hp.readout))
}
