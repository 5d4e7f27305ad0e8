//! The demo's computations, kept free of JS types so they run under `cargo test`.

use gk_core::dataset::one_hot_degree_features;
use gk_core::experiment::with_depth;
use gk_core::kernels::{diagnostics, GramDiagnostics};
use gk_core::nalgebra::DMatrix;
use gk_core::primitives::{deriv_expectation, pair_expectation};
use gk_core::{gram_matrix, ActivationKind, CovTriple, Error, Graph, GramItems, KernelHyperParams, KernelKind, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_GRAPHS: usize = 64;
pub const MAX_NODES: usize = 48;
pub const MAX_DEPTH: usize = 8;

const FEATURE_DIM: usize = 3;
const EDGE_PROBABILITY: f64 = 0.3;

/// A square matrix in row-major order plus its symmetry/PSD diagnostics.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub size: usize,
    pub values: Vec<f64>,
    pub diagnostics: GramDiagnostics,
}

impl Heatmap {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            size: m.nrows(),
            values: m.transpose().as_slice().to_vec(),
            diagnostics: diagnostics(m),
        }
    }
}

pub fn parse_activation(name: &str) -> Result<ActivationKind> {
    match name.to_ascii_lowercase().as_str() {
        "relu" => Ok(ActivationKind::Relu),
        "erf" => Ok(ActivationKind::Erf),
        _ => Err(Error::InvalidHyperParams(format!("unknown activation {name:?}"))),
    }
}

/// Samples the closed-form `E[σ(u)σ(v)]` and `E[σ'(u)σ'(v)]` for unit
/// variances over correlations evenly spaced in `[-1, 1]`. The output is
/// flat `[λ, value, derivative]` triples.
pub fn activation_curves(activation: ActivationKind, samples: usize) -> Result<Vec<f64>> {
    if !(2..=4096).contains(&samples) {
        return Err(Error::InvalidHyperParams(format!("samples must be in 2..=4096, got {samples}")));
    }
    let mut out = Vec::with_capacity(3 * samples);
    for s in 0..samples {
        let lambda = (-1.0 + 2.0 * s as f64 / (samples - 1) as f64).clamp(-1.0, 1.0);
        let c = CovTriple::new(1.0, 1.0, lambda)?;
        out.extend([lambda, pair_expectation(activation, c)?, deriv_expectation(activation, c)?]);
    }
    Ok(out)
}

fn hyperparams(kind: KernelKind, depth: usize) -> Result<KernelHyperParams> {
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(Error::InvalidHyperParams(format!("K must be in 1..={MAX_DEPTH}, got {depth}")));
    }
    let base = match kind {
        KernelKind::Sgtk => KernelHyperParams::sgtk(depth, 1.0),
        KernelKind::Sgnk => KernelHyperParams::sgnk(depth),
        KernelKind::Gntk => KernelHyperParams::gntk(depth),
    };
    Ok(with_depth(kind, depth, &base))
}

/// Erdős–Rényi graphs with uniform features in `[-1, 1)`, sorted by size so
/// block structure shows up in the heatmap.
pub fn random_graphs(count: usize, max_nodes: usize, seed: u64) -> Result<Vec<Graph>> {
    if !(1..=MAX_GRAPHS).contains(&count) {
        return Err(Error::InvalidHyperParams(format!("graph count must be in 1..={MAX_GRAPHS}, got {count}")));
    }
    if !(2..=MAX_NODES).contains(&max_nodes) {
        return Err(Error::InvalidHyperParams(format!("max nodes must be in 2..={MAX_NODES}, got {max_nodes}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = (0..count)
        .map(|_| {
            let n = rng.random_range(2..=max_nodes);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(EDGE_PROBABILITY) {
                        edges.push((i, j));
                    }
                }
            }
            let x = DMatrix::from_fn(n, FEATURE_DIM, |_, _| rng.random_range(-1.0..1.0));
            Graph::new(n, edges, x)
        })
        .collect::<Result<Vec<_>>>()?;
    graphs.sort_by_key(Graph::num_nodes);
    Ok(graphs)
}

pub fn random_graph_gram(kind: KernelKind, depth: usize, count: usize, max_nodes: usize, seed: u64) -> Result<Heatmap> {
    let hp = hyperparams(kind, depth)?;
    let graphs = random_graphs(count, max_nodes, seed)?;
    let gram = gram_matrix(GramItems::Graphs(&graphs), kind, &hp, "")?;
    Ok(Heatmap::from_matrix(&gram.values))
}

/// Reads node-index pairs such as `0-1, 1-2` or `0 1\n1 2`. Any run of
/// non-digits separates numbers, and consecutive numbers form an edge.
pub fn parse_edges(text: &str) -> Result<Vec<(usize, usize)>> {
    let numbers = text
        .split(|c: char| !c.is_ascii_digit())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| Error::InvalidGraph(format!("node index {s:?} is too large")))
        })
        .collect::<Result<Vec<_>>>()?;
    if numbers.len() % 2 != 0 {
        return Err(Error::InvalidGraph(format!(
            "edge list has an odd number of endpoints ({})",
            numbers.len()
        )));
    }
    Ok(numbers.chunks_exact(2).map(|p| (p[0], p[1])).collect())
}

/// Node-level kernel of the graph described by `edge_text`, using one-hot
/// degree features. Nodes are numbered `0..=max index`.
pub fn node_kernel(kind: KernelKind, depth: usize, edge_text: &str) -> Result<Heatmap> {
    let hp = hyperparams(kind, depth)?;
    let edges = parse_edges(edge_text)?;
    let n = edges.iter().map(|&(a, b)| a.max(b) + 1).max().ok_or(Error::EmptyInput("no edges"))?;
    if n > MAX_NODES {
        return Err(Error::InvalidGraph(format!("at most {MAX_NODES} nodes, got {n}")));
    }
    let g = Graph::structure_only(n, edges)?;
    let g = one_hot_degree_features(std::slice::from_ref(&g))?.remove(0);
    let gram = gram_matrix(GramItems::Nodes(&g), kind, &hp, "")?;
    Ok(Heatmap::from_matrix(&gram.values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_curve_endpoints() {
        let c = activation_curves(ActivationKind::Relu, 5).unwrap();
        assert_eq!(c.len(), 15);
        assert_eq!(&c[..3], &[-1.0, 0.0, 0.0]);
        assert_eq!(c[12], 1.0);
        assert!((c[13] - 0.5).abs() < 1e-15);
        assert!((c[14] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn values_increase_with_correlation() {
        for act in [ActivationKind::Relu, ActivationKind::Erf] {
            let c = activation_curves(act, 101).unwrap();
            let rows: Vec<&[f64]> = c.chunks_exact(3).collect();
            assert!(rows.windows(2).all(|w| w[1][1] >= w[0][1] - 1e-15), "{act:?}");
        }
    }

    #[test]
    fn erf_derivative_is_even_in_correlation() {
        let c = activation_curves(ActivationKind::Erf, 101).unwrap();
        let rows: Vec<&[f64]> = c.chunks_exact(3).collect();
        for (a, b) in rows.iter().zip(rows.iter().rev()) {
            assert!((a[2] - b[2]).abs() <= 1e-14, "{a:?} vs {b:?}");
        }
        let relu = activation_curves(ActivationKind::Relu, 101).unwrap();
        let rows: Vec<&[f64]> = relu.chunks_exact(3).collect();
        assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
    }

    #[test]
    fn rejects_bad_sample_counts() {
        assert!(activation_curves(ActivationKind::Relu, 1).is_err());
        assert!(activation_curves(ActivationKind::Relu, 5000).is_err());
        assert!(parse_activation("tanh").is_err());
    }

    #[test]
    fn edge_parsing_accepts_loose_separators() {
        assert_eq!(parse_edges("0-1, 1-2\n2 3").unwrap(), vec![(0, 1), (1, 2), (2, 3)]);
        assert!(parse_edges("0-1, 2").is_err());
        assert!(parse_edges("99999999999999999999999-1").is_err());
    }

    #[test]
    fn random_gram_is_valid_for_every_kind() {
        for kind in KernelKind::ALL {
            let h = random_graph_gram(kind, 2, 10, 8, 7).unwrap();
            assert_eq!(h.size, 10);
            assert_eq!(h.values.len(), 100);
            assert!(h.diagnostics.is_valid(), "{kind}: {:?}", h.diagnostics);
        }
    }

    #[test]
    fn random_graphs_are_seeded() {
        let a = random_graphs(6, 9, 3).unwrap();
        let b = random_graphs(6, 9, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.windows(2).all(|w| w[0].num_nodes() <= w[1].num_nodes()));
    }

    #[test]
    fn node_kernel_of_path_is_mirror_symmetric() {
        let h = node_kernel(KernelKind::Sgtk, 2, "0-1 1-2 2-3").unwrap();
        assert_eq!(h.size, 4);
        let at = |i: usize, j: usize| h.values[i * 4 + j];
        assert!((at(0, 0) - at(3, 3)).abs() <= 1e-12 * at(0, 0));
        assert!((at(0, 1) - at(3, 2)).abs() <= 1e-12 * at(0, 0));
        assert!(h.diagnostics.is_valid());
    }

    #[test]
    fn limits_are_enforced() {
        assert!(random_graph_gram(KernelKind::Sgnk, 0, 5, 5, 0).is_err());
        assert!(random_graph_gram(KernelKind::Sgnk, 2, MAX_GRAPHS + 1, 5, 0).is_err());
        assert!(node_kernel(KernelKind::Gntk, 1, "").is_err());
        assert!(node_kernel(KernelKind::Gntk, 1, &format!("0-{MAX_NODES}")).is_err());
    }
}
