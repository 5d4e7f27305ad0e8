//! End-to-end acceptance checks. Runs every check sequentially (timing checks
//! must not share the machine with other tests) and prints one PASS/FAIL line
//! per criterion. Exits non-zero if any criterion fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use common::dense::{dense_gntk, dense_sgtk};
use common::{max_abs_diff, random_graph, random_graphs};
use gk_core::classify::{ClassifierKind, CvConfig};
use gk_core::dataset::{materialize_splits, SplitRule};
use gk_core::experiment::{graph_cv, node_holdout, with_depth, GraphProtocol, NodeSearch};
use gk_core::kernels::{diagnostics, gntk_pair, sgnk_pair, sgtk_pair};
use gk_core::primitives::{
    erf_pair_kernel, mc_activation_oracle, relu_deriv_expectation, relu_pair_expectation, OracleMode,
};
use gk_core::{gram_matrix, load_dataset, ActivationKind, CovTriple, GramItems, KernelHyperParams, KernelKind};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;

fn data_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn within(elapsed: f64, limit: f64, what: &str) -> Result<(), String> {
    if elapsed < limit {
        Ok(())
    } else {
        Err(format!("{what} took {elapsed:.1}s, limit {limit}s"))
    }
}

fn monte_carlo_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut worst: (f64, &str) = (0.0, "");
    let mut failures = Vec::new();
    for t in 0..100u64 {
        let d = rng.random_range(1..=4);
        let scale = rng.random_range(0.3..2.0);
        let xi: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let xj: Vec<f64> = (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let plain = CovTriple::new(dot(&xi, &xi), dot(&xj, &xj), dot(&xi, &xj)).map_err(|e| e.to_string())?;

        let hp = KernelHyperParams {
            sigma_b: [0.5, 1.0][t as usize % 2],
            ..KernelHyperParams::sgnk(0)
        };
        let b2 = hp.sigma_b * hp.sigma_b;
        let augmented = CovTriple::new(plain.sii + b2, plain.sjj + b2, plain.sij + b2).map_err(|e| e.to_string())?;

        let checks: [(&str, f64, CovTriple, ActivationKind, OracleMode); 3] = [
            ("relu value", relu_pair_expectation(plain).unwrap(), plain, ActivationKind::Relu, OracleMode::Value),
            ("relu deriv", relu_deriv_expectation(plain).unwrap(), plain, ActivationKind::Relu, OracleMode::Derivative),
            ("erf kernel", erf_pair_kernel(&xi, &xj, &hp).unwrap(), augmented, ActivationKind::Erf, OracleMode::Value),
        ];
        for (f, (name, exact, c, act, mode)) in checks.into_iter().enumerate() {
            let est = mc_activation_oracle(c, act, mode, 1_000_000, 1000 + 3 * t + f as u64).map_err(|e| e.to_string())?;
            let z = est.z_score(exact).abs();
            if z > worst.0 {
                worst = (z, name);
            }
            if z > 3.0 {
                failures.push(format!("triple {t} {name}: |z| = {z:.2}"));
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    within(elapsed, 120.0, "Monte-Carlo comparison")?;
    if failures.is_empty() {
        Ok(format!("300 comparisons, max |z| = {:.2} ({}), {elapsed:.1}s", worst.0, worst.1))
    } else {
        Err(format!("{} of 300 outside 3 SE: {}", failures.len(), failures.join("; ")))
    }
}

fn gram_validity() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = rng.random_range(1..=5);
    let graphs: Vec<_> = (0..50).map(|_| random_graph(&mut rng, 12, d, 0.3)).collect();
    let permuted: Vec<_> = graphs
        .iter()
        .map(|g| {
            let mut perm: Vec<usize> = (0..g.num_nodes()).collect();
            perm.shuffle(&mut rng);
            g.permuted(&perm).unwrap()
        })
        .collect();
    let mut summary = Vec::new();
    for kind in KernelKind::ALL {
        let hp = with_depth(kind, 2, &KernelHyperParams::sgtk(2, 0.5));
        let g = gram_matrix(GramItems::Graphs(&graphs), kind, &hp, "").map_err(|e| e.to_string())?;
        let scale = g.values.amax();
        let asym = max_abs_diff(&g.values, &g.values.transpose()) / scale;
        let diag = diagnostics(&g.values);
        let p = gram_matrix(GramItems::Graphs(&permuted), kind, &hp, "").map_err(|e| e.to_string())?;
        let perm_err = max_abs_diff(&g.values, &p.values) / scale;
        if asym > 1e-10 {
            return Err(format!("{kind}: asymmetry {asym:e}"));
        }
        if diag.min_eigenvalue < -1e-8 * diag.max_eigenvalue {
            return Err(format!("{kind}: min eigenvalue {:e} vs max {:e}", diag.min_eigenvalue, diag.max_eigenvalue));
        }
        if perm_err > 1e-10 {
            return Err(format!("{kind}: relabeling changed the Gram by {perm_err:e} relative"));
        }
        summary.push(format!("{kind} perm {perm_err:.1e}"));
    }
    let elapsed = start.elapsed().as_secs_f64();
    within(elapsed, 60.0, "Gram validity suite")?;
    Ok(format!("d={d}, {}, {elapsed:.1}s", summary.join(", ")))
}

fn dense_equivalence() -> Check {
    let start = Instant::now();
    let graphs = random_graphs(2, 40, 8, 3);
    let (mut sgtk_err, mut gntk_err, mut sgnk_err) = (0.0f64, 0.0f64, 0.0f64);
    for (t, pair) in graphs.chunks(2).enumerate() {
        let (g1, g2) = (&pair[0], &pair[1]);
        let k = t % 5;
        let got = sgtk_pair(g1, g2, &KernelHyperParams::sgtk(k, 0.1)).unwrap().node_kernel;
        sgtk_err = sgtk_err.max(max_abs_diff(&got, &dense_sgtk(g1, g2, k, 0.1)));

        let blocks = 1 + t % 4;
        let got = gntk_pair(g1, g2, &KernelHyperParams::gntk(blocks)).unwrap().node_kernel;
        gntk_err = gntk_err.max(max_abs_diff(&got, &dense_gntk(g1, g2, blocks)));

        let hp = KernelHyperParams::sgnk(k);
        let got = sgnk_pair(g1, g2, &hp).unwrap().node_kernel;
        let cfg = gk_core::PropagationConfig::new(k);
        let x1 = gk_core::propagate(&gk_core::normalize_adjacency(g1).unwrap(), g1.features(), cfg).unwrap();
        let x2 = gk_core::propagate(&gk_core::normalize_adjacency(g2).unwrap(), g2.features(), cfg).unwrap();
        for i in 0..x1.nrows() {
            for j in 0..x2.nrows() {
                let xi: Vec<f64> = x1.row(i).iter().copied().collect();
                let xj: Vec<f64> = x2.row(j).iter().copied().collect();
                sgnk_err = sgnk_err.max((got[(i, j)] - erf_pair_kernel(&xi, &xj, &hp).unwrap()).abs());
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    within(elapsed, 60.0, "dense equivalence")?;
    let detail = format!("max |Δ| sgtk {sgtk_err:.1e}, gntk {gntk_err:.1e}, sgnk {sgnk_err:.1e}, {elapsed:.1}s");
    if sgtk_err <= 1e-10 && gntk_err <= 1e-10 && sgnk_err <= 1e-12 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn node_accuracy() -> Check {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, threshold) in [("cora", 81.0), ("citeseer", 70.5)] {
        let start = Instant::now();
        let bundle = load_dataset(&data_dir(name)).map_err(|e| e.to_string())?;
        let split = &materialize_splits(&bundle, SplitRule::Public).map_err(|e| e.to_string())?[0];
        let search = NodeSearch::new(KernelKind::Sgnk, KernelHyperParams::sgnk(1));
        let out = node_holdout(&bundle, split, &search).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        let acc = 100.0 * out.test_accuracy;
        ok &= acc >= threshold && elapsed < 120.0;
        parts.push(format!(
            "{name} {acc:.2}% (>= {threshold}, K={}, λ={}) in {elapsed:.1}s",
            out.hyperparams.k, out.hyperparam
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn graph_accuracy() -> Check {
    let bundle = load_dataset(&data_dir("mutag")).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    let mut ok = true;
    for (kind, base, threshold) in [
        (KernelKind::Sgnk, KernelHyperParams::sgnk(1), 80.5),
        (KernelKind::Sgtk, KernelHyperParams::sgtk(1, 1.0), 79.1),
    ] {
        let start = Instant::now();
        let proto = GraphProtocol {
            kind,
            base,
            k_values: (1..=5).collect(),
            classifier: ClassifierKind::Svm,
            cv: CvConfig::default(),
            normalize: false,
        };
        let out = graph_cv(&bundle.graphs, &bundle.labels, &bundle.fingerprint, &proto).map_err(|e| e.to_string())?;
        let elapsed = start.elapsed().as_secs_f64();
        let (mean, std) = (100.0 * out.report.mean_accuracy, 100.0 * out.report.std_accuracy);
        ok &= mean >= threshold && elapsed < 600.0;
        parts.push(format!("{kind} {mean:.2} ± {std:.2} (>= {threshold}) in {elapsed:.1}s"));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn complexity_shape() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let stem = dir.path().join("sweep");
    let out = Command::new(env!("CARGO_BIN_EXE_gk"))
        .args(["sweep-k", "--dataset", data_dir("mutag").to_str().unwrap()])
        .args(["--K", "1,3,5", "--reps", "5", "--out", stem.to_str().unwrap()])
        .env_remove("GK_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    let csv = std::fs::read_to_string(stem.with_extension("csv")).map_err(|e| e.to_string())?;
    let time = |kind: &str, k: usize| -> Result<f64, String> {
        let prefix = format!("mutag,{kind},{k},gram,");
        csv.lines()
            .find_map(|l| l.strip_prefix(&prefix))
            .and_then(|rest| rest.split(',').next()?.parse().ok())
            .ok_or_else(|| format!("no row for {kind} K={k}"))
    };
    let ratio = |kind: &str| -> Result<f64, String> { Ok(time(kind, 5)? / time(kind, 1)?) };
    let (r_gntk, r_sgtk, r_sgnk) = (ratio("gntk")?, ratio("sgtk")?, ratio("sgnk")?);
    let (t_sgnk, t_sgtk, t_gntk) = (time("sgnk", 3)?, time("sgtk", 3)?, time("gntk", 3)?);
    let detail = format!(
        "K5/K1 gntk {r_gntk:.2} (>= 2), sgtk {r_sgtk:.2} (<= 1.25), sgnk {r_sgnk:.2} (<= 1.25); \
         K=3 sgnk {t_sgnk:.4}s < sgtk {t_sgtk:.4}s < gntk {t_gntk:.4}s"
    );
    if r_gntk >= 2.0 && r_sgtk <= 1.25 && r_sgnk <= 1.25 && t_sgnk < t_sgtk && t_sgtk < t_gntk {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for (dataset, kind) in [("mutag", "sgtk"), ("mutag", "sgnk"), ("mutag", "gntk"), ("cora", "sgnk")] {
        let run = |tag: &str, threads: Option<&str>, env_threads: Option<&str>| -> Result<Vec<u8>, String> {
            let out_path = dir.path().join(format!("{dataset}-{kind}-{tag}.gkm"));
            let mut cmd = Command::new(env!("CARGO_BIN_EXE_gk"));
            cmd.args(["kernel", "--dataset", data_dir(dataset).to_str().unwrap(), "--kind", kind, "--K", "3"])
                .args(["--out", out_path.to_str().unwrap()])
                .env_remove("GK_THREADS");
            if let Some(t) = threads {
                cmd.args(["--threads", t]);
            }
            if let Some(t) = env_threads {
                cmd.env("GK_THREADS", t);
            }
            let out = cmd.output().map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(String::from_utf8_lossy(&out.stderr).into_owned());
            }
            std::fs::read(&out_path).map_err(|e| e.to_string())
        };
        let reference = run("t1", Some("1"), None)?;
        for (tag, threads, env_threads) in [("t3", Some("3"), None), ("t1b", Some("1"), None), ("env4", None, Some("4"))] {
            if run(tag, threads, env_threads)? != reference {
                return Err(format!("{dataset} {kind}: GKM1 bytes differ for {tag}"));
            }
        }
        summary.push(format!("{dataset}/{kind} ({} bytes)", reference.len()));
    }
    Ok(format!("identical across --threads 1/3 and GK_THREADS=4: {}", summary.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 7] = [
        ("closed forms agree with the Monte-Carlo oracle", monte_carlo_oracle),
        ("Gram validity (symmetry, PSD, permutation invariance)", gram_validity),
        ("dense-oracle equivalence", dense_equivalence),
        ("node accuracy: SGNK + KRR on Cora and CiteSeer", node_accuracy),
        ("graph accuracy: SGNK and SGTK + SVM on MUTAG", graph_accuracy),
        ("complexity shape of Gram time vs K on MUTAG", complexity_shape),
        ("determinism of gk kernel across thread counts", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS [{}] {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
