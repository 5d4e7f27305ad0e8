//! Canonical on-disk datasets: a `meta.json` manifest next to `edges.bin`,
//! `features.bin` and, for graph-level data, `graph_indicator.bin`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classify::LabelVector;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::kernels::ItemLevel;

mod features;
pub mod format;
mod splits;

pub use features::{one_hot_degree_features, row_normalize};
pub use splits::{materialize_splits, Split, SplitRule};

pub const FORMAT_TAG: &str = "gk-dataset/1";
const MANIFEST: &str = "meta.json";
const EDGES: &str = "edges.bin";
const FEATURES: &str = "features.bin";
const INDICATOR: &str = "graph_indicator.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureProvenance {
    Native,
    /// No stored features; one-hot degrees are synthesized on load.
    OneHotDegree,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
}

/// Contents of `meta.json`. Unknown fields are preserved in `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub name: String,
    pub level: ItemLevel,
    pub num_nodes: usize,
    pub num_edges: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_graphs: Option<usize>,
    pub num_classes: usize,
    /// Column count of the stored feature file (0 when synthesized).
    pub feature_dim: usize,
    pub feature_provenance: FeatureProvenance,
    pub labels: Vec<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub splits: BTreeMap<String, Vec<usize>>,
    pub files: BTreeMap<String, FileEntry>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl DatasetManifest {
    /// SHA-256 of the compact JSON serialization.
    pub fn fingerprint(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("manifest serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A validated dataset. Node-level bundles hold exactly one graph.
#[derive(Debug, Clone)]
pub struct DatasetBundle {
    pub name: String,
    pub level: ItemLevel,
    pub graphs: Vec<Graph>,
    pub labels: LabelVector,
    pub splits: BTreeMap<String, Vec<usize>>,
    pub feature_provenance: FeatureProvenance,
    pub manifest: DatasetManifest,
    pub fingerprint: String,
    /// Non-fatal findings, such as a non-canonical edge list on disk.
    pub warnings: Vec<String>,
}

struct Payloads {
    edges: Vec<u8>,
    features: Vec<u8>,
    indicator: Option<Vec<u8>>,
}

fn encode_payloads(level: ItemLevel, graphs: &[Graph], store_features: bool) -> Payloads {
    let mut edges = Vec::new();
    let mut indicator = Vec::new();
    let mut offset = 0u32;
    for (gid, g) in graphs.iter().enumerate() {
        edges.extend(g.edges().iter().map(|&(u, v)| (u + offset, v + offset)));
        indicator.extend(std::iter::repeat_n(gid as u32, g.num_nodes()));
        offset += g.num_nodes() as u32;
    }
    let cols = if store_features { graphs[0].feature_dim() } else { 0 };
    let mut x = nalgebra::DMatrix::zeros(offset as usize, cols);
    let mut row = 0;
    for g in graphs {
        if cols > 0 {
            x.rows_mut(row, g.num_nodes()).copy_from(g.features());
        }
        row += g.num_nodes();
    }
    Payloads {
        edges: format::encode_edges(&edges),
        features: format::encode_features(&x),
        indicator: (level == ItemLevel::Graph).then(|| format::encode_indicator(&indicator)),
    }
}

fn check_contents(
    level: ItemLevel,
    graphs: &[Graph],
    labels: &LabelVector,
    splits: &BTreeMap<String, Vec<usize>>,
    origin: &Path,
) -> Result<()> {
    let invalid = |reason: String| Error::InvalidDataset {
        file: origin.to_path_buf(),
        reason,
    };
    if graphs.is_empty() || graphs.iter().any(|g| g.num_nodes() == 0) {
        return Err(invalid("dataset contains an empty graph".into()));
    }
    if level == ItemLevel::Node && graphs.len() != 1 {
        return Err(invalid(format!("node-level dataset must hold one graph, found {}", graphs.len())));
    }
    let dims: Vec<usize> = graphs.iter().map(Graph::feature_dim).collect();
    if dims.iter().any(|&d| d != dims[0]) {
        return Err(invalid("graphs disagree on feature dimension".into()));
    }
    let items = match level {
        ItemLevel::Node => graphs[0].num_nodes(),
        ItemLevel::Graph => graphs.len(),
    };
    if labels.len() != items {
        return Err(invalid(format!("{} labels for {items} items", labels.len())));
    }
    let mut owner: Vec<Option<&str>> = vec![None; items];
    for (name, idx) in splits {
        for &i in idx {
            if i >= items {
                return Err(Error::InvalidSplit(format!("split {name:?} index {i} out of range ({items} items)")));
            }
            if let Some(prev) = owner[i].replace(name) {
                return Err(Error::InvalidSplit(format!("item {i} appears in splits {prev:?} and {name:?}")));
            }
        }
    }
    Ok(())
}

impl DatasetBundle {
    /// Builds a bundle from in-memory parts. With `OneHotDegree` provenance
    /// the graphs may come without features (`d = 0`); they are synthesized.
    pub fn new(
        name: &str,
        level: ItemLevel,
        graphs: Vec<Graph>,
        labels: LabelVector,
        splits: BTreeMap<String, Vec<usize>>,
        feature_provenance: FeatureProvenance,
        extra: BTreeMap<String, serde_json::Value>,
    ) -> Result<Self> {
        let origin = Path::new(name);
        check_contents(level, &graphs, &labels, &splits, origin)?;
        let stored_dim = graphs[0].feature_dim();
        let payloads = encode_payloads(level, &graphs, stored_dim > 0);
        let mut files = BTreeMap::new();
        files.insert(EDGES.to_string(), FileEntry { sha256: sha256_hex(&payloads.edges) });
        files.insert(FEATURES.to_string(), FileEntry { sha256: sha256_hex(&payloads.features) });
        if let Some(ind) = &payloads.indicator {
            files.insert(INDICATOR.to_string(), FileEntry { sha256: sha256_hex(ind) });
        }
        let manifest = DatasetManifest {
            format: FORMAT_TAG.to_string(),
            name: name.to_string(),
            level,
            num_nodes: graphs.iter().map(Graph::num_nodes).sum(),
            num_edges: graphs.iter().map(|g| g.edges().len()).sum(),
            num_graphs: (level == ItemLevel::Graph).then_some(graphs.len()),
            num_classes: labels.num_classes(),
            feature_dim: stored_dim,
            feature_provenance,
            labels: labels.labels().to_vec(),
            splits: splits.clone(),
            files,
            extra,
        };
        Self::assemble(manifest, graphs, labels, Vec::new(), origin)
    }

    fn assemble(
        manifest: DatasetManifest,
        graphs: Vec<Graph>,
        labels: LabelVector,
        warnings: Vec<String>,
        origin: &Path,
    ) -> Result<Self> {
        let graphs = if graphs[0].feature_dim() == 0 {
            if manifest.feature_provenance != FeatureProvenance::OneHotDegree {
                return Err(Error::InvalidDataset {
                    file: origin.to_path_buf(),
                    reason: "no stored features and provenance is not one_hot_degree".into(),
                });
            }
            one_hot_degree_features(&graphs)?
        } else {
            graphs
        };
        Ok(Self {
            name: manifest.name.clone(),
            level: manifest.level,
            splits: manifest.splits.clone(),
            feature_provenance: manifest.feature_provenance,
            fingerprint: manifest.fingerprint(),
            graphs,
            labels,
            manifest,
            warnings,
        })
    }

    pub fn num_items(&self) -> usize {
        self.labels.len()
    }

    /// The single graph of a node-level dataset.
    pub fn node_graph(&self) -> Result<&Graph> {
        match self.level {
            ItemLevel::Node => Ok(&self.graphs[0]),
            ItemLevel::Graph => Err(Error::InvalidSplit(format!(
                "dataset {} is graph-level",
                self.name
            ))),
        }
    }
}

fn read(dir: &Path, file: &str) -> Result<Vec<u8>> {
    let path = dir.join(file);
    fs::read(&path).map_err(|e| Error::io(path, e))
}

fn read_verified(dir: &Path, manifest: &DatasetManifest, file: &str) -> Result<Vec<u8>> {
    let path = dir.join(file);
    let entry = manifest.files.get(file).ok_or_else(|| Error::InvalidDataset {
        file: dir.join(MANIFEST),
        reason: format!("manifest lists no hash for {file}"),
    })?;
    let bytes = read(dir, file)?;
    let actual = sha256_hex(&bytes);
    if !actual.eq_ignore_ascii_case(&entry.sha256) {
        return Err(Error::HashMismatch {
            file: path,
            expected: entry.sha256.clone(),
            actual,
        });
    }
    Ok(bytes)
}

/// Loads and fully validates a canonical dataset directory.
pub fn load_dataset(dir: &Path) -> Result<DatasetBundle> {
    let manifest_path = dir.join(MANIFEST);
    let manifest: DatasetManifest = serde_json::from_slice(&read(dir, MANIFEST)?).map_err(|source| Error::Json {
        path: manifest_path.clone(),
        source,
    })?;
    let invalid = |file: &str, reason: String| Error::InvalidDataset {
        file: dir.join(file),
        reason,
    };
    if manifest.format != FORMAT_TAG {
        return Err(invalid(MANIFEST, format!("unsupported format {:?}", manifest.format)));
    }
    let n = manifest.num_nodes;

    let raw_edges = format::decode_edges(&read_verified(dir, &manifest, EDGES)?, n, &dir.join(EDGES))?;
    let features = format::decode_features(&read_verified(dir, &manifest, FEATURES)?, &dir.join(FEATURES))?;
    if features.nrows() != n || features.ncols() != manifest.feature_dim {
        return Err(invalid(
            FEATURES,
            format!(
                "shape {}x{} disagrees with manifest {}x{}",
                features.nrows(),
                features.ncols(),
                n,
                manifest.feature_dim
            ),
        ));
    }
    let mut warnings = Vec::new();
    let canonical = raw_edges.windows(2).all(|w| w[0] < w[1]) && raw_edges.iter().all(|&(u, v)| u < v);
    if !canonical {
        warnings.push(format!("{EDGES}: edge list is not canonical (sorted, u < v, unique)"));
    }

    let graphs = match manifest.level {
        ItemLevel::Node => {
            let g = Graph::new(n, raw_edges.iter().map(|&(u, v)| (u as usize, v as usize)), features)
                .or_else(|e| match e {
                    Error::InvalidGraph(_) if manifest.feature_dim == 0 => {
                        Graph::structure_only(n, raw_edges.iter().map(|&(u, v)| (u as usize, v as usize)))
                    }
                    other => Err(other),
                })?;
            vec![g]
        }
        ItemLevel::Graph => {
            let num_graphs = manifest
                .num_graphs
                .ok_or_else(|| invalid(MANIFEST, "graph-level manifest lacks num_graphs".into()))?;
            let ind = format::decode_indicator(&read_verified(dir, &manifest, INDICATOR)?, n, num_graphs, &dir.join(INDICATOR))?;
            let mut starts = vec![0usize; num_graphs + 1];
            for &g in &ind {
                starts[g as usize + 1] += 1;
            }
            for g in 0..num_graphs {
                starts[g + 1] += starts[g];
            }
            let mut local_edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_graphs];
            for &(u, v) in &raw_edges {
                let (gu, gv) = (ind[u as usize], ind[v as usize]);
                if gu != gv {
                    return Err(invalid(EDGES, format!("edge ({u}, {v}) connects graphs {gu} and {gv}")));
                }
                let base = starts[gu as usize];
                local_edges[gu as usize].push((u as usize - base, v as usize - base));
            }
            local_edges
                .into_iter()
                .enumerate()
                .map(|(g, edges)| {
                    let (lo, hi) = (starts[g], starts[g + 1]);
                    if manifest.feature_dim == 0 {
                        Graph::structure_only(hi - lo, edges)
                    } else {
                        Graph::new(hi - lo, edges, features.rows(lo, hi - lo).into_owned())
                    }
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    let edge_total: usize = graphs.iter().map(|g| g.edges().len()).sum();
    if manifest.num_edges != raw_edges.len() {
        return Err(invalid(
            MANIFEST,
            format!("num_edges {} but {EDGES} holds {}", manifest.num_edges, raw_edges.len()),
        ));
    }
    if edge_total != raw_edges.len() {
        warnings.push(format!("{EDGES}: {} stored edges reduce to {edge_total} undirected edges", raw_edges.len()));
    }
    let labels = LabelVector::new(manifest.labels.clone(), manifest.num_classes)?;
    check_contents(manifest.level, &graphs, &labels, &manifest.splits, &manifest_path)?;
    DatasetBundle::assemble(manifest, graphs, labels, warnings, dir)
}

/// Writes the bundle in canonical form, refreshing hashes and counts.
pub fn save_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let payloads = encode_payloads(bundle.level, &bundle.graphs, bundle.manifest.feature_dim > 0);
    let mut manifest = bundle.manifest.clone();
    manifest.num_nodes = bundle.graphs.iter().map(Graph::num_nodes).sum();
    manifest.num_edges = bundle.graphs.iter().map(|g| g.edges().len()).sum();
    manifest.files.clear();
    let mut write = |file: &str, bytes: &[u8]| -> Result<()> {
        let path = dir.join(file);
        fs::write(&path, bytes).map_err(|e| Error::io(path, e))?;
        manifest.files.insert(file.to_string(), FileEntry { sha256: sha256_hex(bytes) });
        Ok(())
    };
    write(EDGES, &payloads.edges)?;
    write(FEATURES, &payloads.features)?;
    if let Some(ind) = &payloads.indicator {
        write(INDICATOR, ind)?;
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_vec(&manifest).expect("manifest serializes")).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn tiny_graph_level() -> DatasetBundle {
        let graphs = vec![
            Graph::structure_only(3, [(0, 1), (1, 2)]).unwrap(),
            Graph::structure_only(2, [(0, 1)]).unwrap(),
            Graph::structure_only(1, []).unwrap(),
        ];
        DatasetBundle::new(
            "tiny",
            ItemLevel::Graph,
            graphs,
            LabelVector::new(vec![0, 1, 1], 2).unwrap(),
            BTreeMap::new(),
            FeatureProvenance::OneHotDegree,
            BTreeMap::new(),
        )
        .unwrap()
    }

    fn tiny_node_level() -> DatasetBundle {
        let g = Graph::new(4, [(0, 1), (2, 3)], DMatrix::from_fn(4, 2, |i, j| (i + j) as f64 * 0.5)).unwrap();
        let splits = [("train".to_string(), vec![0, 1]), ("test".to_string(), vec![3])].into();
        DatasetBundle::new(
            "nodes",
            ItemLevel::Node,
            vec![g],
            LabelVector::new(vec![0, 1, 0, 1], 2).unwrap(),
            splits,
            FeatureProvenance::Native,
            [("note".to_string(), serde_json::json!("kept"))].into(),
        )
        .unwrap()
    }

    #[test]
    fn synthesizes_degree_features() {
        let b = tiny_graph_level();
        assert_eq!(b.graphs[0].feature_dim(), 3);
        assert_eq!(b.graphs[2].features(), &DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]));
        assert_eq!(b.manifest.feature_dim, 0);
    }

    #[test]
    fn save_load_round_trip_is_bit_identical() {
        for bundle in [tiny_graph_level(), tiny_node_level()] {
            let dir = tempfile::tempdir().unwrap();
            save_dataset(&bundle, dir.path()).unwrap();
            let loaded = load_dataset(dir.path()).unwrap();
            assert_eq!(loaded.fingerprint, bundle.fingerprint);
            assert_eq!(loaded.graphs, bundle.graphs);
            assert!(loaded.warnings.is_empty());
            let second = tempfile::tempdir().unwrap();
            save_dataset(&loaded, second.path()).unwrap();
            for f in ["meta.json", "edges.bin", "features.bin"] {
                assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(second.path().join(f)).unwrap(), "{f}");
            }
        }
    }

    #[test]
    fn extra_manifest_fields_survive() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&tiny_node_level(), dir.path()).unwrap();
        let loaded = load_dataset(dir.path()).unwrap();
        assert_eq!(loaded.manifest.extra["note"], serde_json::json!("kept"));
    }

    #[test]
    fn corrupted_feature_file_is_a_hash_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&tiny_node_level(), dir.path()).unwrap();
        let path = dir.path().join("features.bin");
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        fs::write(&path, bytes).unwrap();
        match load_dataset(dir.path()) {
            Err(Error::HashMismatch { file, .. }) => assert!(file.ends_with("features.bin")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_file_with_matching_hash_is_reported_as_truncated() {
        let dir = tempfile::tempdir().unwrap();
        save_dataset(&tiny_node_level(), dir.path()).unwrap();
        let path = dir.path().join("edges.bin");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        let meta_path = dir.path().join("meta.json");
        let mut m: DatasetManifest = serde_json::from_slice(&fs::read(&meta_path).unwrap()).unwrap();
        m.files.get_mut("edges.bin").unwrap().sha256 = sha256_hex(&bytes[..bytes.len() - 4]);
        fs::write(&meta_path, serde_json::to_vec(&m).unwrap()).unwrap();
        assert!(matches!(load_dataset(dir.path()), Err(Error::Truncated { .. })));
    }

    #[test]
    fn empty_directory_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.is_input_error());
    }

    #[test]
    fn overlapping_splits_are_rejected() {
        let g = Graph::new(2, [], DMatrix::identity(2, 2)).unwrap();
        let splits = [("train".to_string(), vec![0]), ("test".to_string(), vec![0])].into();
        let r = DatasetBundle::new(
            "x",
            ItemLevel::Node,
            vec![g],
            LabelVector::new(vec![0, 1], 2).unwrap(),
            splits,
            FeatureProvenance::Native,
            BTreeMap::new(),
        );
        assert!(matches!(r, Err(Error::InvalidSplit(_))));
    }

    #[test]
    fn split_rules_on_small_bundle() {
        let b = tiny_node_level();
        let public = materialize_splits(&b, SplitRule::Public).unwrap();
        assert_eq!(public[0].train, vec![0, 1]);
        assert!(public[0].val.is_empty());
        assert!(materialize_splits(&b, SplitRule::First20Last100).is_err());
        assert!(materialize_splits(&tiny_graph_level(), SplitRule::Public).is_err());
        let folds = materialize_splits(&b, SplitRule::KFold { folds: 2, seed: 7 }).unwrap();
        assert_eq!(folds, materialize_splits(&b, SplitRule::KFold { folds: 2, seed: 7 }).unwrap());
        assert_eq!(folds.len(), 2);
    }

    #[test]
    fn first20_last100_uses_ascending_ids() {
        let n = 260;
        let labels: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let g = Graph::new(n, [], DMatrix::from_element(n, 1, 1.0)).unwrap();
        let b = DatasetBundle::new(
            "big",
            ItemLevel::Node,
            vec![g],
            LabelVector::new(labels, 2).unwrap(),
            BTreeMap::new(),
            FeatureProvenance::Native,
            BTreeMap::new(),
        )
        .unwrap();
        let s = &materialize_splits(&b, SplitRule::First20Last100).unwrap()[0];
        assert_eq!(s.train.len(), 40);
        assert_eq!(s.test.len(), 200);
        assert_eq!(s.train[..4], [0, 1, 2, 3]);
        assert_eq!(*s.test.last().unwrap(), n - 1);
        assert_eq!(s.test[0], 60);
    }
}
