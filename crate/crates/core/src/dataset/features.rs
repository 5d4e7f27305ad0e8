use nalgebra::DMatrix;

use crate::error::Result;
use crate::graph::Graph;

/// Replaces node features by one-hot degree indicators. The dimension is the
/// largest degree over all graphs plus one; degrees ignore self-loops.
pub fn one_hot_degree_features(graphs: &[Graph]) -> Result<Vec<Graph>> {
    let degrees: Vec<Vec<usize>> = graphs.iter().map(Graph::degrees).collect();
    let dim = degrees.iter().flatten().max().map_or(1, |m| m + 1);
    graphs
        .iter()
        .zip(&degrees)
        .map(|(g, deg)| {
            let mut x = DMatrix::zeros(g.num_nodes(), dim);
            for (i, &d) in deg.iter().enumerate() {
                x[(i, d)] = 1.0;
            }
            g.with_features(x)
        })
        .collect()
}

/// Scales every row to unit L1 norm; all-zero rows are left unchanged.
pub fn row_normalize(x: &mut DMatrix<f64>) {
    for mut row in x.row_iter_mut() {
        let s: f64 = row.iter().map(|v| v.abs()).sum();
        if s > 0.0 {
            row /= s;
        }
    }
}
