use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer class ids `0 ≤ label < num_classes`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelVector {
    labels: Vec<usize>,
    num_classes: usize,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::InvalidLabels(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self { labels, num_classes })
    }

    /// Class count inferred as `max label + 1`.
    pub fn from_labels(labels: Vec<usize>) -> Self {
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, num_classes }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Labels at `idx`, keeping the class count.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Errors unless at least two classes occur.
    pub fn require_two_classes(&self) -> Result<()> {
        let present = self.class_counts().iter().filter(|&&c| c > 0).count();
        if present < 2 {
            return Err(Error::InvalidLabels(format!(
                "training data contains {present} class(es); need at least 2"
            )));
        }
        Ok(())
    }
}

/// Fraction of positions where `pred` equals `truth`.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> f64 {
    assert_eq!(pred.len(), truth.len());
    if pred.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / pred.len() as f64
}
