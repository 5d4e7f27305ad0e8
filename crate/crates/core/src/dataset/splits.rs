use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetBundle;
use crate::classify::stratified_folds;
use crate::error::{Error, Result};
use crate::kernels::ItemLevel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitRule {
    /// The split shipped in the manifest.
    Public,
    /// First 20 nodes of each class (ascending id) train, last 100 test.
    First20Last100,
    KFold { folds: usize, seed: u64 },
}

impl fmt::Display for SplitRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitRule::Public => f.write_str("public"),
            SplitRule::First20Last100 => f.write_str("first20_last100"),
            SplitRule::KFold { folds, seed } => write!(f, "k_fold({seed},{folds})"),
        }
    }
}

/// Accepts `public`, `first20_last100`, `k_fold`, `k_fold(SEED)` and
/// `k_fold(SEED,FOLDS)`; folds default to 10 and the seed to 0.
impl FromStr for SplitRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSplit(format!("unknown split rule {s:?}"));
        match s {
            "public" => return Ok(SplitRule::Public),
            "first20_last100" => return Ok(SplitRule::First20Last100),
            "k_fold" => return Ok(SplitRule::KFold { folds: 10, seed: 0 }),
            _ => {}
        }
        let args = s
            .strip_prefix("k_fold(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let mut parts = args.split(',').map(str::trim);
        let seed = parts.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let folds = match parts.next() {
            Some(v) => v.parse().map_err(|_| bad())?,
            None => 10,
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(SplitRule::KFold { folds, seed })
    }
}

/// Index lists into the dataset's items; `val` may be empty.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn materialize_splits(bundle: &DatasetBundle, rule: SplitRule) -> Result<Vec<Split>> {
    let labels = &bundle.labels;
    match rule {
        SplitRule::Public => {
            let get = |k: &str| bundle.splits.get(k).cloned();
            match (get("train"), get("test")) {
                (Some(train), Some(test)) => Ok(vec![Split {
                    train,
                    val: get("val").unwrap_or_default(),
                    test,
                }]),
                _ => Err(Error::InvalidSplit(format!(
                    "dataset {} ships no public train/test split",
                    bundle.name
                ))),
            }
        }
        SplitRule::First20Last100 => {
            if bundle.level != ItemLevel::Node {
                return Err(Error::InvalidSplit("first20_last100 applies to node-level datasets".into()));
            }
            let mut split = Split::default();
            for c in 0..labels.num_classes() {
                let members: Vec<usize> = (0..labels.len()).filter(|&i| labels.get(i) == c).collect();
                if members.len() < 120 {
                    return Err(Error::InvalidSplit(format!(
                        "class {c} has {} nodes; first20_last100 needs at least 120",
                        members.len()
                    )));
                }
                split.train.extend_from_slice(&members[..20]);
                split.test.extend_from_slice(&members[members.len() - 100..]);
            }
            split.train.sort_unstable();
            split.test.sort_unstable();
            Ok(vec![split])
        }
        SplitRule::KFold { folds, seed } => {
            let test_sets = stratified_folds(labels, folds, seed)?;
            Ok(test_sets
                .into_iter()
                .map(|test| {
                    let mut in_test = vec![false; labels.len()];
                    for &i in &test {
                        in_test[i] = true;
                    }
                    Split {
                        train: (0..labels.len()).filter(|&i| !in_test[i]).collect(),
                        val: Vec::new(),
                        test,
                    }
                })
                .collect())
        }
    }
}
