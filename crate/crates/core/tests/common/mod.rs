#![allow(dead_code)]

pub mod dense;

use gk_core::nalgebra::DMatrix;
use gk_core::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Erdős–Rényi graph with Gaussian features.
pub fn random_graph(rng: &mut ChaCha8Rng, max_nodes: usize, d: usize, edge_prob: f64) -> Graph {
    let n = rng.random_range(1..=max_nodes);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(edge_prob) {
                edges.push((i, j));
            }
        }
    }
    let x = DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    Graph::new(n, edges, x).unwrap()
}

pub fn random_graphs(seed: u64, count: usize, max_nodes: usize, d: usize) -> Vec<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_graph(&mut rng, max_nodes, d, 0.35)).collect()
}

/// Dense `A` from the canonical edge list.
pub fn dense_adjacency(g: &Graph) -> DMatrix<f64> {
    let n = g.num_nodes();
    let mut a = DMatrix::zeros(n, n);
    for &(u, v) in g.edges() {
        a[(u as usize, v as usize)] = 1.0;
        a[(v as usize, u as usize)] = 1.0;
    }
    a
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
