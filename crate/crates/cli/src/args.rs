use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use gk_core::classify::ClassifierKind;
use gk_core::dataset::SplitRule;
use gk_core::{KernelHyperParams, KernelKind, Readout};

#[derive(Debug, Parser)]
#[command(name = "gk", version, about = "Graph kernel computation, classification and timing")]
pub struct Cli {
    /// Worker threads (default: all cores). GK_THREADS takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute a Gram matrix and write it as GKM1 plus CSV.
    Kernel(KernelCmd),
    /// Evaluate a kernel classifier on a dataset or a precomputed Gram file.
    Classify(ClassifyCmd),
    /// Time Gram computation across propagation depths.
    SweepK(SweepCmd),
    /// Check a dataset directory against the canonical format.
    DatasetValidate(ValidateCmd),
}

#[derive(Debug, Clone, Args)]
pub struct KernelOpts {
    /// Bias term β (SGTK; SGNK only with --sgnk-add-beta).
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Bias standard deviation of the erf layer.
    #[arg(long = "sigma-b", default_value_t = 1.0)]
    pub sigma_b: f64,
    #[arg(long, value_enum, default_value_t = ReadoutArg::Sum)]
    pub readout: ReadoutArg,
    /// Add β² to every SGNK entry.
    #[arg(long = "sgnk-add-beta")]
    pub sgnk_add_beta: bool,
}

impl KernelOpts {
    pub fn hyperparams(&self, kind: KernelKind) -> KernelHyperParams {
        let base = match kind {
            KernelKind::Sgtk => KernelHyperParams::sgtk(2, self.beta),
            KernelKind::Sgnk => KernelHyperParams::sgnk(2),
            KernelKind::Gntk => KernelHyperParams::gntk(1),
        };
        KernelHyperParams {
            beta: self.beta,
            sigma_b: self.sigma_b,
            readout: self.readout.into(),
            sgnk_add_beta: self.sgnk_add_beta,
            ..base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReadoutArg {
    Sum,
    Mean,
}

impl From<ReadoutArg> for Readout {
    fn from(r: ReadoutArg) -> Self {
        match r {
            ReadoutArg::Sum => Readout::Sum,
            ReadoutArg::Mean => Readout::Mean,
        }
    }
}

#[derive(Debug, Args)]
pub struct KernelCmd {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_kind)]
    pub kind: KernelKind,
    /// Propagation depth (GNTK: number of blocks).
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    #[command(flatten)]
    pub kernel: KernelOpts,
    /// GKM1 output path; the CSV export is written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyCmd {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Precomputed GKM1 file; replaces kernel computation.
    #[arg(long)]
    pub gram: Option<PathBuf>,
    #[arg(long, value_parser = parse_kind, default_value = "sgnk")]
    pub kind: KernelKind,
    /// Depth candidates, e.g. `3`, `1,2,4` or `1..5`.
    #[arg(long = "K", value_parser = parse_usize_list, default_value = "1..5")]
    pub k: NumList<usize>,
    /// β candidates for the node-level search (the first one is used elsewhere).
    #[arg(long = "beta-grid", value_parser = parse_f64_list, default_value = "0,0.5,1")]
    pub beta_grid: NumList<f64>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, value_parser = parse_classifier, default_value = "krr")]
    pub classifier: ClassifierKind,
    /// Overrides the λ (KRR) or C (SVM) grid.
    #[arg(long, value_parser = parse_f64_list)]
    pub grid: Option<NumList<f64>>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    /// `public`, `first20_last100`, `k_fold`, `k_fold(SEED)` or
    /// `k_fold(SEED,FOLDS)`. Defaults to public for node-level datasets and
    /// k-fold CV for graph-level ones.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<SplitRule>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// L1-normalize node features (default: on for node-level datasets).
    #[arg(long = "row-normalize")]
    pub row_normalize: Option<bool>,
    /// Cosine-normalize graph-level Gram matrices before classification.
    #[arg(long = "normalize-gram", default_value_t = false, action = clap::ArgAction::Set)]
    pub normalize_gram: bool,
    /// CSV output; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Comma-separated kernel kinds.
    #[arg(long, value_parser = parse_kind_list, default_value = "sgtk,sgnk,gntk")]
    pub kind: NumList<KernelKind>,
    #[arg(long = "K", value_parser = parse_usize_list, default_value = "1..5")]
    pub k: NumList<usize>,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    /// Also run a classification per (kind, K) and record its accuracy.
    #[arg(long, value_parser = parse_classifier)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output stem; `<out>.csv` and `<out>.svg` are written.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateCmd {
    /// Dataset directory (alternatively `--dataset`).
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Treat warnings as errors.
    #[arg(long)]
    pub strict: bool,
}

/// A parsed list such as `1..5` or `0.5,1,2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NumList<T>(pub Vec<T>);

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("invalid list element {v:?}")))
        .collect()
}

fn parse_usize_list(s: &str) -> Result<NumList<usize>, String> {
    let values = match s.split_once("..") {
        Some((lo, hi)) => {
            let lo: usize = lo.trim().parse().map_err(|_| format!("invalid range {s:?}"))?;
            let hi: usize = hi.trim_start_matches('=').trim().parse().map_err(|_| format!("invalid range {s:?}"))?;
            (lo..=hi).collect()
        }
        None => parse_list(s)?,
    };
    if values.is_empty() {
        return Err(format!("empty range {s:?}"));
    }
    Ok(NumList(values))
}

fn parse_f64_list(s: &str) -> Result<NumList<f64>, String> {
    parse_list(s).map(NumList)
}

fn parse_kind(s: &str) -> Result<KernelKind, String> {
    s.parse().map_err(|e: gk_core::Error| e.to_string())
}

fn parse_kind_list(s: &str) -> Result<NumList<KernelKind>, String> {
    s.split(',').map(|v| parse_kind(v.trim())).collect::<Result<_, _>>().map(NumList)
}

fn parse_classifier(s: &str) -> Result<ClassifierKind, String> {
    s.parse().map_err(|e: gk_core::Error| e.to_string())
}

fn parse_split(s: &str) -> Result<SplitRule, String> {
    s.parse().map_err(|e: gk_core::Error| e.to_string())
}
