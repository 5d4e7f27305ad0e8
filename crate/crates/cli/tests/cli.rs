use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gk_core::classify::LabelVector;
use gk_core::dataset::FeatureProvenance;
use gk_core::nalgebra::DMatrix;
use gk_core::{save_dataset, DatasetBundle, Graph, ItemLevel};

fn data_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn gk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gk"))
        .args(args)
        .env_remove("GK_THREADS")
        .output()
        .unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Twelve small labelled graphs written in the canonical layout.
fn tiny_graph_dataset(dir: &Path) {
    let graphs: Vec<Graph> = (0..12)
        .map(|i| {
            let n = 3 + i % 3;
            let edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
            Graph::new(n, edges, DMatrix::from_fn(n, 2, |r, c| ((r + c + i) % 3) as f64)).unwrap()
        })
        .collect();
    let labels = LabelVector::new((0..12).map(|i| i % 2).collect(), 2).unwrap();
    let bundle = DatasetBundle::new(
        "tiny",
        ItemLevel::Graph,
        graphs,
        labels,
        BTreeMap::new(),
        FeatureProvenance::Native,
        BTreeMap::new(),
    )
    .unwrap();
    save_dataset(&bundle, dir).unwrap();
}

#[test]
fn empty_directory_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gk(&["dataset-validate", path_arg(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_kernel_kind_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gk(&[
        "kernel",
        "--dataset",
        path_arg(&data_dir("mutag")),
        "--kind",
        "rbf",
        "--out",
        path_arg(&dir.path().join("g.gkm")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixtures_validate_without_warnings() {
    for name in ["cora", "citeseer", "mutag", "mutag-degree"] {
        let out = gk(&["dataset-validate", "--strict", path_arg(&data_dir(name))]);
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout.contains("warnings: 0"), "{name}: {stdout}");
    }
}

#[test]
fn gram_of_another_dataset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = dir.path().join("tiny");
    tiny_graph_dataset(&tiny);
    let gram = dir.path().join("tiny.gkm");
    let out = gk(&["kernel", "--dataset", path_arg(&tiny), "--kind", "sgnk", "--K", "1", "--out", path_arg(&gram)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("tiny.csv").exists());

    let out = gk(&["classify", "--dataset", path_arg(&data_dir("mutag")), "--gram", path_arg(&gram)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("188"));
}

#[test]
fn classify_from_gram_file_prints_result_row() {
    let dir = tempfile::tempdir().unwrap();
    let tiny = dir.path().join("tiny");
    tiny_graph_dataset(&tiny);
    let gram = dir.path().join("tiny.gkm");
    assert!(gk(&["kernel", "--dataset", path_arg(&tiny), "--kind", "sgtk", "--out", path_arg(&gram)])
        .status
        .success());
    let csv = dir.path().join("result.csv");
    let out = gk(&[
        "classify",
        "--dataset",
        path_arg(&tiny),
        "--gram",
        path_arg(&gram),
        "--classifier",
        "svm",
        "--split",
        "k_fold(0,2)",
        "--out",
        path_arg(&csv),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# provenance: {"));
    assert_eq!(lines[1], "dataset,kernel,classifier,K,beta,hyperparam,mean_acc,std_acc,wall_time_s");
    let fields: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(&fields[..4], &["tiny", "sgtk", "svm", "2"]);
    let acc: f64 = fields[6].parse().unwrap();
    assert!((0.0..=100.0).contains(&acc));
}

#[test]
fn sweep_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let stem = dir.path().join("sweep");
    let out = gk(&["sweep-k", "--dataset", path_arg(&data_dir("mutag")), "--reps", "1", "--out", path_arg(&stem)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = std::fs::read_to_string(stem.with_extension("csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "dataset,kernel,K,phase,wall_time_s,accuracy,repetitions");
    assert_eq!(rows.len(), 1 + 15);
    for kind in ["sgtk", "sgnk", "gntk"] {
        for k in 1..=5 {
            let prefix = format!("mutag,{kind},{k},gram,");
            assert!(rows.iter().any(|r| r.starts_with(&prefix)), "missing {prefix}");
        }
    }

    let svg = std::fs::read_to_string(stem.with_extension("svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    // axes plus one line per kernel
    assert_eq!(svg.matches("<polyline").count(), 4);
    assert!(svg.contains("<metadata>"));
}

#[test]
fn gk_threads_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gk"))
        .args(["kernel", "--dataset", path_arg(&data_dir("mutag")), "--kind", "sgnk", "--threads", "1"])
        .args(["--out", path_arg(&dir.path().join("g.gkm"))])
        .env("GK_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("threads=2"));

    let bad = Command::new(env!("CARGO_BIN_EXE_gk"))
        .args(["dataset-validate", path_arg(&data_dir("mutag"))])
        .env("GK_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
