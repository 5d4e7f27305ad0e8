use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gk_core::classify::{cross_validate, ClassifierKind, CvConfig, RidgeConfig, SvmConfig};
use gk_core::dataset::{load_dataset, materialize_splits, DatasetBundle, SplitRule};
use gk_core::experiment::{cosine_normalize, graph_cv, holdout_candidates, node_holdout, with_depth, GraphProtocol, NodeSearch};
use gk_core::kernels::io::{read_gkm1, write_csv, write_gkm1};
use gk_core::{gram_matrix, GramItems, GramMatrix, ItemLevel, KernelHyperParams, KernelKind};
use serde_json::json;

use crate::args::{ClassifyCmd, KernelCmd, SweepCmd, ValidateCmd};
use crate::bench::{interleaved_medians, provenance_comment, BenchRecord, Phase, BENCH_HEADER};
use crate::svg::{Chart, Series};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gk_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },
}

impl CliError {
    /// 2 for bad input, 3 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_input_error() => 3,
            _ => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Largest Gram size for which `gk kernel` runs the eigenvalue check.
const EIGEN_CHECK_LIMIT: usize = 1500;

pub const RESULT_HEADER: &str = "dataset,kernel,classifier,K,beta,hyperparam,mean_acc,std_acc,wall_time_s";

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|source| CliError::Write {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn items(bundle: &DatasetBundle) -> GramItems<'_> {
    match bundle.level {
        ItemLevel::Node => GramItems::Nodes(&bundle.graphs[0]),
        ItemLevel::Graph => GramItems::Graphs(&bundle.graphs),
    }
}

fn depth_of(kind: KernelKind, hp: &KernelHyperParams) -> usize {
    match kind {
        KernelKind::Gntk => hp.gntk_blocks,
        KernelKind::Sgtk | KernelKind::Sgnk => hp.k,
    }
}

fn csv_sibling(out: &Path) -> PathBuf {
    if out.extension().is_some_and(|e| e == "csv") {
        out.with_extension("gram.csv")
    } else {
        out.with_extension("csv")
    }
}

pub fn kernel(cmd: &KernelCmd) -> Result<()> {
    let bundle = load_dataset(&cmd.dataset)?;
    let hp = with_depth(cmd.kind, cmd.k, &cmd.kernel.hyperparams(cmd.kind));
    hp.validate()?;
    let start = Instant::now();
    let mut gram = gram_matrix(items(&bundle), cmd.kind, &hp, &bundle.fingerprint)?;
    let elapsed = start.elapsed().as_secs_f64();
    if gram.values.iter().any(|v| !v.is_finite()) {
        return Err(gk_core::Error::Numeric("Gram matrix has non-finite entries".into()).into());
    }
    if gram.size() <= EIGEN_CHECK_LIMIT {
        let d = gram.diagnostics();
        if !d.is_valid() {
            log::warn!("Gram matrix diagnostics out of tolerance: {d:?}");
        }
    }
    gram.notes.insert("dataset".into(), bundle.name.clone());
    write_gkm1(&cmd.out, &gram)?;
    let csv = csv_sibling(&cmd.out);
    write_csv(&csv, &gram)?;
    println!(
        "{} {} K={} p={} wall_time_s={elapsed:.6} threads={} -> {} , {}",
        bundle.name,
        cmd.kind,
        cmd.k,
        gram.size(),
        rayon::current_num_threads(),
        cmd.out.display(),
        csv.display()
    );
    Ok(())
}

struct ResultRow {
    k: String,
    beta: f64,
    hyperparam: String,
    mean: f64,
    std: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn joined<T: ToString>(values: impl IntoIterator<Item = T>) -> String {
    values.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

fn default_grid(classifier: ClassifierKind) -> Vec<f64> {
    match classifier {
        ClassifierKind::Krr => RidgeConfig::default().lambda_grid,
        ClassifierKind::Svm => SvmConfig::default().c_grid,
    }
}

fn cv_config(folds: usize, seed: u64, classifier: ClassifierKind, grid: &[f64]) -> CvConfig {
    let mut cfg = CvConfig {
        folds,
        seed,
        ..Default::default()
    };
    match classifier {
        ClassifierKind::Krr => cfg.ridge.lambda_grid = grid.to_vec(),
        ClassifierKind::Svm => cfg.svm.c_grid = grid.to_vec(),
    }
    cfg
}

/// Evaluates precomputed candidate matrices under `rule`.
fn classify_grams(
    grams: &[&gk_core::nalgebra::DMatrix<f64>],
    depths: &[usize],
    bundle: &DatasetBundle,
    rule: SplitRule,
    classifier: ClassifierKind,
    grid: &[f64],
    beta: f64,
) -> Result<ResultRow> {
    if let SplitRule::KFold { folds, seed } = rule {
        let cfg = cv_config(folds, seed, classifier, grid);
        let report = gk_core::classify::cross_validate_candidates(grams, &bundle.labels, classifier, &cfg)?;
        return Ok(ResultRow {
            k: depths[report.best.gram].to_string(),
            beta,
            hyperparam: report.best.hyperparam.to_string(),
            mean: report.mean_accuracy,
            std: report.std_accuracy,
        });
    }
    let splits = materialize_splits(bundle, rule)?;
    let reports = splits
        .iter()
        .map(|s| holdout_candidates(grams, &bundle.labels, s, classifier, grid))
        .collect::<gk_core::Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&reports.iter().map(|r| r.test_accuracy).collect::<Vec<_>>());
    Ok(ResultRow {
        k: joined(reports.iter().map(|r| depths[r.selection.gram])),
        beta,
        hyperparam: joined(reports.iter().map(|r| r.selection.hyperparam)),
        mean,
        std,
    })
}

pub fn classify(cmd: &ClassifyCmd) -> Result<()> {
    let bundle = load_dataset(&cmd.dataset)?;
    let grid = cmd.grid.as_ref().map_or_else(|| default_grid(cmd.classifier), |g| g.0.clone());
    let rule = cmd.split.unwrap_or(match bundle.level {
        ItemLevel::Node => SplitRule::Public,
        ItemLevel::Graph => SplitRule::KFold {
            folds: cmd.folds,
            seed: cmd.seed,
        },
    });
    let base = cmd.kernel.hyperparams(cmd.kind);
    let row_normalize = cmd.row_normalize.unwrap_or(bundle.level == ItemLevel::Node);
    let mut kind = cmd.kind;
    let start = Instant::now();

    let row = if let Some(path) = &cmd.gram {
        let gram = read_gkm1(path)?;
        if gram.size() != bundle.num_items() {
            return Err(gk_core::Error::DimensionMismatch {
                context: "Gram size vs dataset labels",
                expected: bundle.num_items(),
                actual: gram.size(),
            }
            .into());
        }
        if gram.dataset_fingerprint != bundle.fingerprint {
            log::warn!("{} was computed from a different dataset fingerprint", path.display());
        }
        kind = gram.kind;
        let m = if cmd.normalize_gram && gram.item_level == ItemLevel::Graph {
            cosine_normalize(&gram.values)
        } else {
            gram.values.clone()
        };
        let depth = depth_of(gram.kind, &gram.hyperparams);
        classify_grams(&[&m], &[depth], &bundle, rule, cmd.classifier, &grid, gram.hyperparams.beta)?
    } else {
        match bundle.level {
            ItemLevel::Node => {
                let search = NodeSearch {
                    k_values: cmd.k.0.clone(),
                    betas: cmd.beta_grid.0.clone(),
                    classifier: cmd.classifier,
                    grid: grid.clone(),
                    row_normalize,
                    ..NodeSearch::new(cmd.kind, base)
                };
                let outcomes = materialize_splits(&bundle, rule)?
                    .iter()
                    .map(|s| node_holdout(&bundle, s, &search))
                    .collect::<gk_core::Result<Vec<_>>>()?;
                let (mean, std) = mean_std(&outcomes.iter().map(|o| o.test_accuracy).collect::<Vec<_>>());
                ResultRow {
                    k: joined(outcomes.iter().map(|o| depth_of(cmd.kind, &o.hyperparams))),
                    beta: outcomes[0].hyperparams.beta,
                    hyperparam: joined(outcomes.iter().map(|o| o.hyperparam)),
                    mean,
                    std,
                }
            }
            ItemLevel::Graph => match rule {
                SplitRule::KFold { folds, seed } => {
                    let proto = GraphProtocol {
                        kind: cmd.kind,
                        base,
                        k_values: cmd.k.0.clone(),
                        classifier: cmd.classifier,
                        cv: cv_config(folds, seed, cmd.classifier, &grid),
                        normalize: cmd.normalize_gram,
                    };
                    let out = graph_cv(&bundle.graphs, &bundle.labels, &bundle.fingerprint, &proto)?;
                    ResultRow {
                        k: out.best_k().to_string(),
                        beta: base.beta,
                        hyperparam: out.report.best.hyperparam.to_string(),
                        mean: out.report.mean_accuracy,
                        std: out.report.std_accuracy,
                    }
                }
                _ => {
                    let grams = cmd
                        .k
                        .0
                        .iter()
                        .map(|&k| {
                            let g = gram_matrix(items(&bundle), cmd.kind, &with_depth(cmd.kind, k, &base), &bundle.fingerprint)?;
                            Ok(if cmd.normalize_gram { cosine_normalize(&g.values) } else { g.values })
                        })
                        .collect::<gk_core::Result<Vec<_>>>()?;
                    let refs: Vec<_> = grams.iter().collect();
                    classify_grams(&refs, &cmd.k.0, &bundle, rule, cmd.classifier, &grid, base.beta)?
                }
            },
        }
    };
    let elapsed = start.elapsed().as_secs_f64();

    let provenance = json!({
        "command": "classify",
        "dataset": bundle.name,
        "dataset_fingerprint": bundle.fingerprint,
        "gram_file": cmd.gram.as_ref().map(|p| p.display().to_string()),
        "kernel": kind.name(),
        "hyperparams": base,
        "K_candidates": cmd.k.0,
        "beta_grid": cmd.beta_grid.0,
        "classifier": cmd.classifier.to_string(),
        "classifier_grid": grid,
        "split": rule.to_string(),
        "seed": cmd.seed,
        "row_normalize": row_normalize,
        "normalize_gram": cmd.normalize_gram,
        "threads": rayon::current_num_threads(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let line = format!(
        "{},{},{},{},{},{},{:.4},{:.4},{:.6}",
        bundle.name,
        kind,
        cmd.classifier,
        row.k,
        row.beta,
        row.hyperparam,
        100.0 * row.mean,
        100.0 * row.std,
        elapsed
    );
    let csv = format!("{}{RESULT_HEADER}\n{line}\n", provenance_comment(&provenance));
    print!("{csv}");
    eprintln!(
        "accuracy {:.2} ± {:.2} (K={}, {}={}) in {elapsed:.2}s",
        100.0 * row.mean,
        100.0 * row.std,
        row.k,
        if cmd.classifier == ClassifierKind::Krr { "lambda" } else { "C" },
        row.hyperparam
    );
    if let Some(out) = &cmd.out {
        write_file(out, csv)?;
    }
    Ok(())
}

fn sweep_classify(bundle: &DatasetBundle, gram: &GramMatrix, classifier: ClassifierKind, cmd: &SweepCmd) -> Result<f64> {
    let grid = default_grid(classifier);
    Ok(match bundle.level {
        ItemLevel::Graph => {
            let cfg = cv_config(cmd.folds, cmd.seed, classifier, &grid);
            cross_validate(&gram.values, &bundle.labels, classifier, &cfg)?.mean_accuracy
        }
        ItemLevel::Node => {
            let split = &materialize_splits(bundle, SplitRule::Public)?[0];
            holdout_candidates(&[&gram.values], &bundle.labels, split, classifier, &grid)?.test_accuracy
        }
    })
}

pub fn sweep_k(cmd: &SweepCmd) -> Result<()> {
    if cmd.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let bundle = load_dataset(&cmd.dataset)?;
    let mut configs = Vec::new();
    for &kind in &cmd.kind.0 {
        for &k in &cmd.k.0 {
            let hp = with_depth(kind, k, &cmd.kernel.hyperparams(kind));
            hp.validate()?;
            configs.push((kind, k, hp));
        }
    }
    let times = interleaved_medians(configs.len(), cmd.reps, |c| {
        let (kind, _, hp) = &configs[c];
        gram_matrix(items(&bundle), *kind, hp, &bundle.fingerprint).map(drop)
    })?;
    let mut records = Vec::new();
    for (&(kind, k, hp), &t) in configs.iter().zip(&times) {
        records.push(BenchRecord {
            dataset: bundle.name.clone(),
            kind,
            k,
            phase: Phase::Gram,
            wall_time_s: t,
            accuracy: None,
            repetitions: cmd.reps,
        });
        if let Some(classifier) = cmd.classifier {
            let gram = gram_matrix(items(&bundle), kind, &hp, &bundle.fingerprint)?;
            let start = Instant::now();
            let acc = sweep_classify(&bundle, &gram, classifier, cmd)?;
            records.push(BenchRecord {
                dataset: bundle.name.clone(),
                kind,
                k,
                phase: Phase::Classify,
                wall_time_s: start.elapsed().as_secs_f64().max(1e-9),
                accuracy: Some(acc),
                repetitions: 1,
            });
        }
        eprintln!("{kind} K={k}: {t:.4}s");
    }

    let provenance = json!({
        "command": "sweep-k",
        "dataset": bundle.name,
        "dataset_fingerprint": bundle.fingerprint,
        "kinds": cmd.kind.0.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "K_values": cmd.k.0,
        "hyperparams": cmd.kind.0.iter().map(|&k| (k.name(), cmd.kernel.hyperparams(k))).collect::<std::collections::BTreeMap<_, _>>(),
        "reps": cmd.reps,
        "warmup_runs": 1,
        "rep_order": "interleaved across configurations",
        "timing": "median wall time of the gram_matrix call",
        "classifier": cmd.classifier.map(|c| c.to_string()),
        "classifier_grid": cmd.classifier.map(default_grid),
        "folds": cmd.folds,
        "seed": cmd.seed,
        "threads": rayon::current_num_threads(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    let mut csv = provenance_comment(&provenance);
    csv.push_str(BENCH_HEADER);
    csv.push('\n');
    for r in &records {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    let series: Vec<Series> = cmd
        .kind
        .0
        .iter()
        .map(|&kind| Series {
            name: kind.name().to_uppercase(),
            points: records
                .iter()
                .filter(|r| r.kind == kind && r.phase == Phase::Gram)
                .map(|r| (r.k as f64, r.wall_time_s))
                .collect(),
        })
        .collect();
    let svg = Chart {
        title: &format!("{}: Gram time vs K", bundle.name),
        x_label: "K",
        y_label: "median wall time (s)",
        series: &series,
        provenance: &provenance.to_string(),
    }
    .render();
    let csv_path = cmd.out.with_extension("csv");
    let svg_path = cmd.out.with_extension("svg");
    write_file(&csv_path, &csv)?;
    write_file(&svg_path, svg)?;
    print!("{csv}");
    eprintln!("wrote {} and {}", csv_path.display(), svg_path.display());
    Ok(())
}

pub fn dataset_validate(cmd: &ValidateCmd) -> Result<()> {
    let dir = cmd
        .dir
        .as_ref()
        .or(cmd.dataset.as_ref())
        .ok_or_else(|| CliError::Usage("a dataset directory is required".into()))?;
    let bundle = load_dataset(dir)?;
    let m = &bundle.manifest;
    println!("name: {}", bundle.name);
    println!("level: {:?}", bundle.level);
    println!("nodes: {}", m.num_nodes);
    println!("edges: {}", m.num_edges);
    if let Some(g) = m.num_graphs {
        println!("graphs: {g}");
    }
    println!("classes: {}", m.num_classes);
    println!("feature dim: {} ({:?})", bundle.graphs[0].feature_dim(), bundle.feature_provenance);
    for (name, idx) in &bundle.splits {
        println!("split {name}: {}", idx.len());
    }
    println!("fingerprint: {}", bundle.fingerprint);
    for w in &bundle.warnings {
        println!("warning: {w}");
    }
    println!("warnings: {}", bundle.warnings.len());
    if cmd.strict && !bundle.warnings.is_empty() {
        return Err(CliError::Usage(format!("{} warnings in strict mode", bundle.warnings.len())));
    }
    Ok(())
}
