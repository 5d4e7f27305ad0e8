//! Graph representation, degree-normalized adjacency, and K-step sparse
//! propagation of node features and cross-graph covariances.
//!
//! Dense matrices are `nalgebra::DMatrix<f64>` (column-major), so a sparse
//! product `Â · X` walks each feature column contiguously. Every reduction
//! visits neighbors in ascending index order, which keeps results
//! bit-identical no matter how columns are spread over threads.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Undirected graph with dense node features.
///
/// Edges are stored once as `(u, v)` with `u < v`, sorted and deduplicated.
/// Self-loops in the input are dropped: the propagation operator adds exactly
/// one self-loop per node on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(u32, u32)>,
    features: DMatrix<f64>,
}

impl Graph {
    pub fn new<I>(num_nodes: usize, edges: I, features: DMatrix<f64>) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if features.nrows() != num_nodes {
            return Err(Error::DimensionMismatch {
                context: "graph features rows",
                expected: num_nodes,
                actual: features.nrows(),
            });
        }
        if features.ncols() == 0 && num_nodes > 0 {
            return Err(Error::InvalidGraph(
                "feature dimension must be at least 1".into(),
            ));
        }
        let edges = canonical_edges(num_nodes, edges)?;
        Ok(Self {
            num_nodes,
            edges,
            features,
        })
    }

    /// A graph without native features (`d = 0`), waiting for synthesized
    /// features such as one-hot degrees. Kernels reject such graphs.
    pub fn structure_only<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let edges = canonical_edges(num_nodes, edges)?;
        Ok(Self {
            num_nodes,
            edges,
            features: DMatrix::zeros(num_nodes, 0),
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    /// Replaces the feature matrix, keeping the structure.
    pub fn with_features(&self, features: DMatrix<f64>) -> Result<Self> {
        Graph::new(
            self.num_nodes,
            self.edges.iter().map(|&(u, v)| (u as usize, v as usize)),
            features,
        )
    }

    /// Node degrees, not counting any self-loop.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        deg
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.num_nodes {
            return Err(Error::DimensionMismatch {
                context: "permutation length",
                expected: self.num_nodes,
                actual: perm.len(),
            });
        }
        let mut seen = vec![false; self.num_nodes];
        for &p in perm {
            if p >= self.num_nodes || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidGraph("not a permutation".into()));
            }
        }
        let d = self.feature_dim();
        let mut features = DMatrix::zeros(self.num_nodes, d);
        for i in 0..self.num_nodes {
            features.set_row(perm[i], &self.features.row(i));
        }
        let edges = self
            .edges
            .iter()
            .map(|&(u, v)| (perm[u as usize], perm[v as usize]));
        Ok(Self {
            num_nodes: self.num_nodes,
            edges: canonical_edges(self.num_nodes, edges)?,
            features,
        })
    }

    /// Adjacency lists including each node itself, ascending.
    fn closed_neighborhoods(&self) -> Vec<Vec<u32>> {
        let mut nbrs: Vec<Vec<u32>> = (0..self.num_nodes as u32).map(|i| vec![i]).collect();
        for &(u, v) in &self.edges {
            nbrs[u as usize].push(v);
            nbrs[v as usize].push(u);
        }
        for list in &mut nbrs {
            list.sort_unstable();
        }
        nbrs
    }
}

fn canonical_edges<I>(num_nodes: usize, edges: I) -> Result<Vec<(u32, u32)>>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    if num_nodes > u32::MAX as usize {
        return Err(Error::InvalidGraph("too many nodes".into()));
    }
    let mut out = Vec::new();
    for (u, v) in edges {
        if u >= num_nodes || v >= num_nodes {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) out of range for {num_nodes} nodes"
            )));
        }
        if u != v {
            out.push((u.min(v) as u32, u.max(v) as u32));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Row-compressed sparse square matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&j, &v)| (j as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Self-loop-augmented adjacency `A + I` with unit weights.
    pub fn augmented_adjacency(g: &Graph) -> Self {
        Self::from_neighborhoods(&g.closed_neighborhoods(), |_, _| 1.0)
    }

    fn from_neighborhoods(nbrs: &[Vec<u32>], weight: impl Fn(usize, usize) -> f64) -> Self {
        let mut row_ptr = Vec::with_capacity(nbrs.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for (i, list) in nbrs.iter().enumerate() {
            for &j in list {
                col_idx.push(j);
                values.push(weight(i, j as usize));
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dim: nbrs.len(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self · m` for a dense `m` with `dim` rows.
    pub fn mul_dense(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(m.nrows(), self.dim);
        let mut out = DMatrix::zeros(self.dim, m.ncols());
        let n = self.dim;
        if n == 0 {
            return out;
        }
        let src = m.as_slice();
        let step = |(c, dst): (usize, &mut [f64])| {
            let col = &src[c * n..(c + 1) * n];
            for (i, slot) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    acc += self.values[k] * col[self.col_idx[k] as usize];
                }
                *slot = acc;
            }
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            if m.ncols() > 1 && self.nnz() * m.ncols() > 1 << 16 {
                out.as_mut_slice()
                    .par_chunks_mut(n)
                    .enumerate()
                    .for_each(step);
                return out;
            }
        }
        out.as_mut_slice().chunks_mut(n).enumerate().for_each(step);
        out
    }

    /// `m · selfᵀ` for a dense `m` with `dim` columns.
    pub fn mul_dense_transposed_right(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        debug_assert_eq!(m.ncols(), self.dim);
        let rows = m.nrows();
        let mut out = DMatrix::zeros(rows, self.dim);
        // column j of the product combines columns k of m with weights self[j][k]
        for j in 0..self.dim {
            let mut dst = out.column_mut(j);
            for k in self.row_ptr[j]..self.row_ptr[j + 1] {
                let w = self.values[k];
                let src = m.column(self.col_idx[k] as usize);
                for r in 0..rows {
                    dst[r] += w * src[r];
                }
            }
        }
        out
    }
}

/// `Â = D̃^{-1/2} (A + I) D̃^{-1/2}` in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(CsrMatrix);

impl NormalizedAdjacency {
    pub fn csr(&self) -> &CsrMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.0.to_dense()
    }
}

/// Number of propagation steps; `K = 0` is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PropagationConfig {
    pub k: usize,
}

impl PropagationConfig {
    pub fn new(k: usize) -> Self {
        Self { k }
    }
}

pub fn normalize_adjacency(g: &Graph) -> Result<NormalizedAdjacency> {
    if g.num_nodes() == 0 {
        return Err(Error::EmptyInput("graph has no nodes"));
    }
    let nbrs = g.closed_neighborhoods();
    let deg: Vec<f64> = nbrs.iter().map(|l| l.len() as f64).collect();
    let csr = CsrMatrix::from_neighborhoods(&nbrs, |i, j| 1.0 / (deg[i] * deg[j]).sqrt());
    Ok(NormalizedAdjacency(csr))
}

/// `Â^K X` as `K` successive sparse-dense products.
pub fn propagate(
    adj: &NormalizedAdjacency,
    features: &DMatrix<f64>,
    cfg: PropagationConfig,
) -> Result<DMatrix<f64>> {
    if features.nrows() != adj.dim() {
        return Err(Error::DimensionMismatch {
            context: "propagate: feature rows vs adjacency",
            expected: adj.dim(),
            actual: features.nrows(),
        });
    }
    let mut x = features.clone();
    for _ in 0..cfg.k {
        x = adj.0.mul_dense(&x);
    }
    Ok(x)
}

/// `Â₁^K Σ (Â₂^K)ᵀ` through repeated left and right sparse products.
pub fn propagate_covariance(
    adj1: &NormalizedAdjacency,
    adj2: &NormalizedAdjacency,
    sigma: &DMatrix<f64>,
    cfg: PropagationConfig,
) -> Result<DMatrix<f64>> {
    if sigma.nrows() != adj1.dim() {
        return Err(Error::DimensionMismatch {
            context: "propagate_covariance: rows vs left adjacency",
            expected: adj1.dim(),
            actual: sigma.nrows(),
        });
    }
    if sigma.ncols() != adj2.dim() {
        return Err(Error::DimensionMismatch {
            context: "propagate_covariance: columns vs right adjacency",
            expected: adj2.dim(),
            actual: sigma.ncols(),
        });
    }
    let mut s = sigma.clone();
    for _ in 0..cfg.k {
        s = adj1.0.mul_dense(&s);
        s = adj2.0.mul_dense_transposed_right(&s);
    }
    Ok(s)
}
