//! Evaluation protocols shared by the CLI and the acceptance tests: a
//! fixed-split node classification search and graph-level nested CV over
//! propagation depths.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classify::{
    accuracy, cross_validate_candidates, fit_and_score, svm_fit, ClassifierKind, CvConfig, CvReport, KrrModel, LabelVector, Selection, SvmConfig,
};
use crate::dataset::{row_normalize, DatasetBundle, Split};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::{gram_matrix, GramItems, GramMatrix, KernelKind, PreparedGraph};
use crate::primitives::KernelHyperParams;

/// Hyperparameters for `kind` at depth `k`. GNTK has no propagation depth of
/// its own, so `k` sets its number of aggregation/NTK blocks.
pub fn with_depth(kind: KernelKind, k: usize, base: &KernelHyperParams) -> KernelHyperParams {
    let mut hp = *base;
    match kind {
        KernelKind::Gntk => hp.gntk_blocks = k,
        KernelKind::Sgtk | KernelKind::Sgnk => hp.k = k,
    }
    hp
}

/// `K_ij / √(K_ii K_jj)`; rows with a non-positive diagonal are zeroed.
pub fn cosine_normalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let inv: Vec<f64> = m
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect();
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (inv[i] * inv[j]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSearch {
    pub kind: KernelKind,
    pub base: KernelHyperParams,
    pub k_values: Vec<usize>,
    /// Searched only when the kernel depends on β.
    pub betas: Vec<f64>,
    pub classifier: ClassifierKind,
    /// λ for KRR, C for SVM.
    pub grid: Vec<f64>,
    pub row_normalize: bool,
}

impl NodeSearch {
    pub fn new(kind: KernelKind, base: KernelHyperParams) -> Self {
        Self {
            kind,
            base,
            k_values: (1..=5).collect(),
            betas: vec![0.0, 0.5, 1.0],
            classifier: ClassifierKind::Krr,
            grid: crate::classify::log_grid(-3.0, 1.0, 9),
            row_normalize: true,
        }
    }

    fn uses_beta(&self) -> bool {
        match self.kind {
            KernelKind::Sgtk => true,
            KernelKind::Sgnk => self.base.sgnk_add_beta,
            KernelKind::Gntk => false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.grid.is_empty() || (self.uses_beta() && self.betas.is_empty()) {
            return Err(Error::InvalidHyperParams("empty node search grid".into()));
        }
        if self.grid.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidHyperParams("classifier hyperparameters must be positive and finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeOutcome {
    pub test_accuracy: f64,
    /// Selection score: validation accuracy, or inner-CV accuracy on the
    /// training set when the split has no validation nodes.
    pub selection_accuracy: f64,
    pub hyperparams: KernelHyperParams,
    /// Selected λ (KRR) or C (SVM).
    pub hyperparam: f64,
    pub predictions: Vec<usize>,
}

/// Selects `(K, β, λ or C)` on the validation nodes, refits on the training
/// nodes and scores the test nodes. Ties keep the earliest grid point.
pub fn node_holdout(bundle: &DatasetBundle, split: &Split, search: &NodeSearch) -> Result<NodeOutcome> {
    search.validate()?;
    let graph = bundle.node_graph()?;
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::InvalidSplit("train and test sets must be nonempty".into()));
    }
    let n = graph.num_nodes();
    if let Some(&i) = split.train.iter().chain(&split.val).chain(&split.test).find(|&&i| i >= n) {
        return Err(Error::InvalidSplit(format!("node {i} out of range for {n} nodes")));
    }
    let graph = if search.row_normalize {
        let mut x = graph.features().clone();
        row_normalize(&mut x);
        graph.with_features(x)?
    } else {
        graph.clone()
    };
    let labels = &bundle.labels;
    let train_labels = labels.subset(&split.train);
    let betas = if search.uses_beta() { search.betas.clone() } else { vec![search.base.beta] };

    let mut best: Option<(f64, KernelHyperParams, f64)> = None;
    for &k in &search.k_values {
        for &beta in &betas {
            let mut hp = with_depth(search.kind, k, &search.base);
            hp.beta = beta;
            hp.validate()?;
            let prepared = PreparedGraph::new(&graph, search.kind, &hp)?;
            let k_train = prepared.node_block(&split.train, &split.train, &hp);
            let scores: Vec<f64> = if split.val.is_empty() {
                inner_scores(&k_train, &train_labels, search.classifier, &search.grid)?
            } else {
                let k_val = prepared.node_block(&split.val, &split.train, &hp);
                let truth: Vec<usize> = split.val.iter().map(|&i| labels.get(i)).collect();
                search
                    .grid
                    .iter()
                    .map(|&h| Ok(accuracy(&fit_predict(&k_train, &train_labels, &k_val, search.classifier, h)?, &truth)))
                    .collect::<Result<_>>()?
            };
            for (&h, &score) in search.grid.iter().zip(&scores) {
                if best.is_none_or(|(s, ..)| score > s) {
                    best = Some((score, hp, h));
                }
            }
        }
    }
    let (selection_accuracy, hp, hyperparam) = best.expect("grid is nonempty");
    log::info!(
        "node search picked K={} beta={} {}={hyperparam} (selection acc {selection_accuracy:.4})",
        hp.k,
        hp.beta,
        search.classifier
    );
    let prepared = PreparedGraph::new(&graph, search.kind, &hp)?;
    let k_train = prepared.node_block(&split.train, &split.train, &hp);
    let k_test = prepared.node_block(&split.test, &split.train, &hp);
    let predictions = fit_predict(&k_train, &train_labels, &k_test, search.classifier, hyperparam)?;
    let truth: Vec<usize> = split.test.iter().map(|&i| labels.get(i)).collect();
    Ok(NodeOutcome {
        test_accuracy: accuracy(&predictions, &truth),
        selection_accuracy,
        hyperparams: hp,
        hyperparam,
        predictions,
    })
}

fn fit_predict(
    k_train: &DMatrix<f64>,
    train_labels: &LabelVector,
    k_query: &DMatrix<f64>,
    classifier: ClassifierKind,
    hyperparam: f64,
) -> Result<Vec<usize>> {
    match classifier {
        ClassifierKind::Krr => KrrModel::fit(k_train, train_labels, hyperparam)?.predict(k_query),
        ClassifierKind::Svm => svm_fit(k_train, train_labels, &SvmConfig::default().with_c(hyperparam))?.predict(k_query),
    }
}

/// Mean 3-fold accuracy per grid value on the training block.
fn inner_scores(k_train: &DMatrix<f64>, labels: &LabelVector, classifier: ClassifierKind, grid: &[f64]) -> Result<Vec<f64>> {
    let cfg = CvConfig {
        folds: 3,
        ..Default::default()
    };
    let folds = crate::classify::stratified_folds(labels, cfg.folds, cfg.seed)?;
    grid
        .iter()
        .map(|&h| {
            let mut total = 0.0;
            for test in &folds {
                let train: Vec<usize> = (0..labels.len()).filter(|i| test.binary_search(i).is_err()).collect();
                total += fit_and_score(k_train, labels, &train, test, classifier, h, &cfg)?;
            }
            Ok(total / folds.len() as f64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutReport {
    pub test_accuracy: f64,
    pub selection_accuracy: f64,
    pub selection: Selection,
}

/// Fixed-split evaluation over precomputed Gram matrices. The candidate
/// Gram and grid value are chosen on `split.val`, or by 3-fold CV on the
/// training items when there is no validation set.
pub fn holdout_candidates(
    grams: &[&DMatrix<f64>],
    labels: &LabelVector,
    split: &Split,
    classifier: ClassifierKind,
    grid: &[f64],
) -> Result<HoldoutReport> {
    let p = labels.len();
    if grams.is_empty() || grid.is_empty() {
        return Err(Error::EmptyInput("no candidates for holdout selection"));
    }
    for g in grams {
        if g.nrows() != p || g.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "holdout Gram vs labels",
                expected: p,
                actual: g.nrows(),
            });
        }
    }
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::InvalidSplit("train and test sets must be nonempty".into()));
    }
    if let Some(&i) = split.train.iter().chain(&split.val).chain(&split.test).find(|&&i| i >= p) {
        return Err(Error::InvalidSplit(format!("index {i} out of range for {p} items")));
    }
    let cfg = CvConfig::default();
    let train_labels = labels.subset(&split.train);
    let mut best: Option<(f64, Selection)> = None;
    for (g, gram) in grams.iter().enumerate() {
        let scores = if split.val.is_empty() {
            let k_train = gram.select_rows(&split.train).select_columns(&split.train);
            inner_scores(&k_train, &train_labels, classifier, grid)?
        } else {
            grid.iter()
                .map(|&h| fit_and_score(gram, labels, &split.train, &split.val, classifier, h, &cfg))
                .collect::<Result<Vec<_>>>()?
        };
        for (&h, &score) in grid.iter().zip(&scores) {
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, Selection { gram: g, hyperparam: h }));
            }
        }
    }
    let (selection_accuracy, selection) = best.expect("candidates are nonempty");
    let test_accuracy = fit_and_score(
        grams[selection.gram],
        labels,
        &split.train,
        &split.test,
        classifier,
        selection.hyperparam,
        &cfg,
    )?;
    Ok(HoldoutReport {
        test_accuracy,
        selection_accuracy,
        selection,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphProtocol {
    pub kind: KernelKind,
    pub base: KernelHyperParams,
    pub k_values: Vec<usize>,
    pub classifier: ClassifierKind,
    pub cv: CvConfig,
    /// Cosine-normalize each Gram matrix before classification.
    pub normalize: bool,
}

#[derive(Debug, Clone)]
pub struct GraphOutcome {
    pub report: CvReport,
    /// One Gram matrix per entry of `k_values`, before normalization.
    pub grams: Vec<GramMatrix>,
    pub k_values: Vec<usize>,
}

impl GraphOutcome {
    /// Depth chosen most often by the inner selection.
    pub fn best_k(&self) -> usize {
        self.k_values[self.report.best.gram]
    }
}

/// Nested cross-validation over graphs, selecting K and the classifier
/// hyperparameter on each outer training fold.
pub fn graph_cv(graphs: &[Graph], labels: &LabelVector, fingerprint: &str, proto: &GraphProtocol) -> Result<GraphOutcome> {
    if proto.k_values.is_empty() {
        return Err(Error::InvalidHyperParams("empty K range".into()));
    }
    if graphs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            context: "graphs vs labels",
            expected: labels.len(),
            actual: graphs.len(),
        });
    }
    let grams = proto
        .k_values
        .iter()
        .map(|&k| gram_matrix(GramItems::Graphs(graphs), proto.kind, &with_depth(proto.kind, k, &proto.base), fingerprint))
        .collect::<Result<Vec<_>>>()?;
    let prepared: Vec<DMatrix<f64>> = grams
        .iter()
        .map(|g| if proto.normalize { cosine_normalize(&g.values) } else { g.values.clone() })
        .collect();
    let refs: Vec<&DMatrix<f64>> = prepared.iter().collect();
    let report = cross_validate_candidates(&refs, labels, proto.classifier, &proto.cv)?;
    Ok(GraphOutcome {
        report,
        grams,
        k_values: proto.k_values.clone(),
    })
}
