//! Stratified k-fold cross-validation with nested hyperparameter selection.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::krr::{KrrModel, RidgeConfig};
use super::labels::{accuracy, LabelVector};
use super::svm::{svm_fit, SvmConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Krr,
    Svm,
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClassifierKind::Krr => "krr",
            ClassifierKind::Svm => "svm",
        })
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "krr" => Ok(ClassifierKind::Krr),
            "svm" => Ok(ClassifierKind::Svm),
            _ => Err(Error::InvalidHyperParams(format!("unknown classifier {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub inner_folds: usize,
    pub seed: u64,
    pub ridge: RidgeConfig,
    pub svm: SvmConfig,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 10,
            inner_folds: 3,
            seed: 0,
            ridge: RidgeConfig::default(),
            svm: SvmConfig::default(),
        }
    }
}

impl CvConfig {
    fn grid(&self, classifier: ClassifierKind) -> &[f64] {
        match classifier {
            ClassifierKind::Krr => &self.ridge.lambda_grid,
            ClassifierKind::Svm => &self.svm.c_grid,
        }
    }
}

/// Candidate chosen on one outer fold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Index into the list of candidate Gram matrices.
    pub gram: usize,
    /// λ for KRR, C for SVM.
    pub hyperparam: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub mean_accuracy: f64,
    /// Population standard deviation over outer folds.
    pub std_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
    pub selections: Vec<Selection>,
    /// Most frequent selection; ties go to the earliest candidate.
    pub best: Selection,
}

/// Test-index sets of `folds` stratified folds, each sorted ascending.
///
/// Members of every class are shuffled with `seed` and dealt round-robin,
/// continuing the rotation across classes. If some class has fewer members
/// than folds, a warning is logged and all items are dealt unstratified.
pub fn stratified_folds(labels: &LabelVector, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    let p = labels.len();
    if folds < 2 {
        return Err(Error::InvalidSplit(format!("need at least 2 folds, got {folds}")));
    }
    if p < folds {
        return Err(Error::InvalidSplit(format!("{p} items cannot fill {folds} folds")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts = labels.class_counts();
    let groups: Vec<Vec<usize>> = if counts.iter().any(|&c| c > 0 && c < folds) {
        log::warn!("a class has fewer members than {folds} folds; using unstratified folds");
        vec![(0..p).collect()]
    } else {
        (0..labels.num_classes())
            .map(|c| (0..p).filter(|&i| labels.get(i) == c).collect())
            .collect()
    };
    let mut out = vec![Vec::new(); folds];
    let mut slot = 0;
    for mut members in groups {
        members.shuffle(&mut rng);
        for i in members {
            out[slot].push(i);
            slot = (slot + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

fn complement(p: usize, test: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; p];
    for &i in test {
        mask[i] = false;
    }
    (0..p).filter(|&i| mask[i]).collect()
}

fn block(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Trains on `train`, predicts `test`, returns accuracy.
pub fn fit_and_score(
    gram: &DMatrix<f64>,
    labels: &LabelVector,
    train: &[usize],
    test: &[usize],
    classifier: ClassifierKind,
    hyperparam: f64,
    cfg: &CvConfig,
) -> Result<f64> {
    let train_labels = labels.subset(train);
    let k_train = block(gram, train, train);
    let k_cross = block(gram, test, train);
    let pred = match classifier {
        ClassifierKind::Krr => KrrModel::fit(&k_train, &train_labels, hyperparam)?.predict(&k_cross)?,
        ClassifierKind::Svm => svm_fit(&k_train, &train_labels, &cfg.svm.with_c(hyperparam))?.predict(&k_cross)?,
    };
    let truth: Vec<usize> = test.iter().map(|&i| labels.get(i)).collect();
    Ok(accuracy(&pred, &truth))
}

fn select_inner(
    grams: &[&DMatrix<f64>],
    labels: &LabelVector,
    train: &[usize],
    classifier: ClassifierKind,
    cfg: &CvConfig,
    seed: u64,
) -> Result<Selection> {
    let grid = cfg.grid(classifier);
    let sub = labels.subset(train);
    let inner = stratified_folds(&sub, cfg.inner_folds, seed)?;
    let mut best: Option<(f64, Selection)> = None;
    for (g, gram) in grams.iter().enumerate() {
        for &h in grid {
            let mut total = 0.0;
            for test_local in &inner {
                let train_local = complement(train.len(), test_local);
                let tr: Vec<usize> = train_local.iter().map(|&i| train[i]).collect();
                let te: Vec<usize> = test_local.iter().map(|&i| train[i]).collect();
                total += fit_and_score(gram, labels, &tr, &te, classifier, h, cfg)?;
            }
            let score = total / inner.len() as f64;
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, Selection { gram: g, hyperparam: h }));
            }
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::InvalidHyperParams("empty hyperparameter grid".into()))
}

/// Nested cross-validation on one Gram matrix.
pub fn cross_validate(
    gram: &DMatrix<f64>,
    labels: &LabelVector,
    classifier: ClassifierKind,
    cfg: &CvConfig,
) -> Result<CvReport> {
    cross_validate_candidates(&[gram], labels, classifier, cfg)
}

/// Nested cross-validation where the inner loop also chooses among several
/// candidate Gram matrices (for example one per propagation depth).
pub fn cross_validate_candidates(
    grams: &[&DMatrix<f64>],
    labels: &LabelVector,
    classifier: ClassifierKind,
    cfg: &CvConfig,
) -> Result<CvReport> {
    let p = labels.len();
    if grams.is_empty() {
        return Err(Error::EmptyInput("no candidate Gram matrices"));
    }
    for g in grams {
        if g.nrows() != p || g.ncols() != p {
            return Err(Error::DimensionMismatch {
                context: "cross-validation Gram vs labels",
                expected: p,
                actual: g.nrows(),
            });
        }
    }
    cfg.ridge.validate()?;
    cfg.svm.validate()?;
    if cfg.grid(classifier).is_empty() {
        return Err(Error::InvalidHyperParams("empty hyperparameter grid".into()));
    }
    let folds = stratified_folds(labels, cfg.folds, cfg.seed)?;
    let run = |(f, test): (usize, &Vec<usize>)| -> Result<(f64, Selection)> {
        let train = complement(p, test);
        let inner_seed = cfg.seed.wrapping_add(1 + f as u64);
        let sel = select_inner(grams, labels, &train, classifier, cfg, inner_seed)?;
        let acc = fit_and_score(grams[sel.gram], labels, &train, test, classifier, sel.hyperparam, cfg)?;
        Ok((acc, sel))
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(f64, Selection)> = {
        use rayon::prelude::*;
        folds.par_iter().enumerate().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(f64, Selection)> = folds.iter().enumerate().map(run).collect::<Result<_>>()?;

    let fold_accuracies: Vec<f64> = results.iter().map(|r| r.0).collect();
    let selections: Vec<Selection> = results.iter().map(|r| r.1).collect();
    let n = fold_accuracies.len() as f64;
    let mean = fold_accuracies.iter().sum::<f64>() / n;
    let var = fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    Ok(CvReport {
        mean_accuracy: mean,
        std_accuracy: var.sqrt(),
        fold_accuracies,
        best: most_frequent(&selections, cfg.grid(classifier)),
        selections,
    })
}

fn most_frequent(selections: &[Selection], grid: &[f64]) -> Selection {
    let key = |s: &Selection| (s.gram, grid.iter().position(|&h| h == s.hyperparam).unwrap_or(usize::MAX));
    let mut best = selections[0];
    let mut best_count = 0;
    let mut keys: Vec<_> = selections.iter().map(key).collect();
    keys.sort_unstable();
    keys.dedup();
    for k in keys {
        let count = selections.iter().filter(|s| key(s) == k).count();
        if count > best_count {
            best_count = count;
            best = *selections.iter().find(|s| key(s) == k).unwrap();
        }
    }
    best
}
