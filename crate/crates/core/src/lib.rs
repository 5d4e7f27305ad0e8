//! Graph kernels derived from infinite-width graph networks (SGTK, SGNK and a
//! GNTK baseline), kernel classifiers, and a canonical dataset format.

pub mod error;
pub mod graph;
pub mod classify;
pub mod dataset;
pub mod experiment;
pub mod kernels;
pub mod primitives;

pub use error::{Error, Result};
pub use graph::{normalize_adjacency, propagate, propagate_covariance, Graph, NormalizedAdjacency, PropagationConfig};
pub use kernels::{gram_matrix, GramItems, GramMatrix, ItemLevel, KernelKind};
pub use primitives::{ActivationKind, CovTriple, KernelHyperParams, Readout};
pub use dataset::{load_dataset, save_dataset, DatasetBundle};
pub use nalgebra;
