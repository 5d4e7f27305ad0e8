//! Kernel classifiers and cross-validation drivers.

mod cv;
mod krr;
mod labels;
mod svm;

pub use cv::{cross_validate, cross_validate_candidates, fit_and_score, stratified_folds, ClassifierKind, CvConfig, CvReport, Selection};
pub use krr::{argmax_rows, krr_fit_predict, log_grid, KrrModel, RidgeConfig};
pub use labels::{accuracy, LabelVector};
pub use svm::{svm_fit, BinarySvm, SvmConfig, SvmModel};
