//! Node-level and graph-level kernels, readout, and Gram-matrix assembly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::primitives::{KernelHyperParams, Readout};

mod gntk;
mod gram;
pub mod io;
mod sgnk;
mod sgtk;

pub use gntk::gntk_pair;
pub use gram::{gram_matrix, node_kernel_block, GramItems, PreparedGraph};
pub use sgnk::sgnk_pair;
pub use sgtk::{sgtk_pair, CovarianceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Sgtk,
    Sgnk,
    Gntk,
}

impl KernelKind {
    pub const ALL: [KernelKind; 3] = [KernelKind::Sgtk, KernelKind::Sgnk, KernelKind::Gntk];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::Sgtk => "sgtk",
            KernelKind::Sgnk => "sgnk",
            KernelKind::Gntk => "gntk",
        }
    }

    /// Tag byte used in GKM1 files.
    pub fn code(self) -> u8 {
        match self {
            KernelKind::Sgtk => 0,
            KernelKind::Sgnk => 1,
            KernelKind::Gntk => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Dispatches to the matching pair kernel.
    pub fn pair(self, g1: &Graph, g2: &Graph, hp: &KernelHyperParams) -> Result<PairKernel> {
        match self {
            KernelKind::Sgtk => sgtk_pair(g1, g2, hp),
            KernelKind::Sgnk => sgnk_pair(g1, g2, hp),
            KernelKind::Gntk => gntk_pair(g1, g2, hp),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidHyperParams(format!("unknown kernel kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItemLevel {
    Node,
    Graph,
}

/// Node-pair kernel between two graphs together with its readout.
#[derive(Debug, Clone, PartialEq)]
pub struct PairKernel {
    pub node_kernel: DMatrix<f64>,
    pub graph_value: f64,
}

impl PairKernel {
    pub(crate) fn new(node_kernel: DMatrix<f64>, readout_kind: Readout) -> Self {
        let graph_value = apply_readout(&node_kernel, readout_kind);
        Self {
            node_kernel,
            graph_value,
        }
    }
}

/// Sum of all entries, accumulated in row-major order.
pub fn readout(node_kernel: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for i in 0..node_kernel.nrows() {
        for j in 0..node_kernel.ncols() {
            acc += node_kernel[(i, j)];
        }
    }
    acc
}

pub(crate) fn apply_readout(node_kernel: &DMatrix<f64>, kind: Readout) -> f64 {
    let sum = readout(node_kernel);
    match kind {
        Readout::Sum => sum,
        Readout::Mean => sum / node_kernel.len().max(1) as f64,
    }
}

/// Copies the upper triangle onto the lower one.
pub(crate) fn mirror_upper(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        for i in j + 1..m.nrows() {
            m[(i, j)] = m[(j, i)];
        }
    }
}

pub(crate) fn check_pair_inputs(g1: &Graph, g2: &Graph, hp: &KernelHyperParams) -> Result<()> {
    hp.validate()?;
    if g1.num_nodes() == 0 || g2.num_nodes() == 0 {
        return Err(Error::EmptyInput("graph has no nodes"));
    }
    if g1.feature_dim() != g2.feature_dim() {
        return Err(Error::DimensionMismatch {
            context: "feature dimension of graph pair",
            expected: g1.feature_dim(),
            actual: g2.feature_dim(),
        });
    }
    if g1.feature_dim() == 0 {
        return Err(Error::InvalidGraph(
            "graph has no node features; synthesize them first".into(),
        ));
    }
    Ok(())
}

/// Dense symmetric kernel matrix with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix {
    #[serde(skip)]
    pub values: DMatrix<f64>,
    pub kind: KernelKind,
    pub hyperparams: KernelHyperParams,
    pub item_level: ItemLevel,
    pub dataset_fingerprint: String,
    /// Extra provenance such as feature preprocessing, sorted by key.
    #[serde(default)]
    pub notes: BTreeMap<String, String>,
}

/// Outcome of [`GramMatrix::check_invariants`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramDiagnostics {
    pub max_asymmetry: f64,
    pub min_diagonal: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl GramDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.max_asymmetry <= 1e-10
            && self.min_diagonal > 0.0
            && self.min_eigenvalue >= -1e-8 * self.max_eigenvalue.abs()
    }
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.values.nrows()
    }

    /// Relative asymmetry, smallest diagonal entry, and eigenvalue extremes.
    pub fn diagnostics(&self) -> GramDiagnostics {
        diagnostics(&self.values)
    }

    pub fn check_invariants(&self) -> Result<GramDiagnostics> {
        let d = self.diagnostics();
        if !d.is_valid() {
            return Err(Error::Numeric(format!(
                "Gram matrix violates symmetry/PSD invariants: {d:?}"
            )));
        }
        Ok(d)
    }
}

pub fn diagnostics(m: &DMatrix<f64>) -> GramDiagnostics {
    let scale = m.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut max_asymmetry = 0.0f64;
    for i in 0..m.nrows() {
        for j in i + 1..m.ncols() {
            max_asymmetry = max_asymmetry.max((m[(i, j)] - m[(j, i)]).abs() / scale);
        }
    }
    let min_diagonal = m.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues;
    GramDiagnostics {
        max_asymmetry,
        min_diagonal,
        min_eigenvalue: eig.iter().copied().fold(f64::INFINITY, f64::min),
        max_eigenvalue: eig.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}
