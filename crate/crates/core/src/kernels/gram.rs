//! Gram-matrix assembly over graphs or over the nodes of one graph.

use nalgebra::DMatrix;

use super::{apply_readout, mirror_upper, check_pair_inputs, gntk, sgnk, sgtk, GramMatrix, ItemLevel, KernelKind};
use crate::error::{Error, Result};
use crate::graph::{normalize_adjacency, propagate, Graph, PropagationConfig};
use crate::primitives::KernelHyperParams;

/// Items a Gram matrix ranges over.
#[derive(Debug, Clone, Copy)]
pub enum GramItems<'a> {
    /// One entry per graph, each the readout of a pair kernel.
    Graphs(&'a [Graph]),
    /// One entry per node of a single graph.
    Nodes(&'a Graph),
}

/// Partner-independent per-graph work (propagation, self-covariances), done
/// once per graph instead of once per pair.
#[derive(Debug, Clone)]
pub struct PreparedGraph(Prepared);

#[derive(Debug, Clone)]
enum Prepared {
    Sgtk { x: DMatrix<f64>, roots: Vec<f64> },
    Sgnk { x: DMatrix<f64>, inv: Vec<f64> },
    Gntk(Box<gntk::GntkSide>),
}

impl PreparedGraph {
    pub fn new(g: &Graph, kind: KernelKind, hp: &KernelHyperParams) -> Result<Self> {
        check_pair_inputs(g, g, hp)?;
        Ok(Self(match kind {
            KernelKind::Sgtk => {
                let x = propagated(g, hp)?;
                let roots = sgtk::root_variances(&x, hp);
                Prepared::Sgtk { x, roots }
            }
            KernelKind::Sgnk => {
                let x = propagated(g, hp)?;
                let inv = sgnk::inv_scales(&x, hp);
                Prepared::Sgnk { x, inv }
            }
            KernelKind::Gntk => Prepared::Gntk(Box::new(gntk::GntkSide::new(g, hp.gntk_blocks))),
        }))
    }

    /// Node-pair kernel against another prepared graph of the same kind.
    pub fn node_kernel(&self, other: &Self, hp: &KernelHyperParams) -> DMatrix<f64> {
        match (&self.0, &other.0) {
            (Prepared::Sgtk { x: x1, roots: r1 }, Prepared::Sgtk { x: x2, roots: r2 }) => {
                sgtk::node_kernel(x1, r1, x2, r2, hp)
            }
            (Prepared::Sgnk { x: x1, inv: s1 }, Prepared::Sgnk { x: x2, inv: s2 }) => {
                sgnk::node_kernel(x1, s1, x2, s2, hp)
            }
            (Prepared::Gntk(a), Prepared::Gntk(b)) => gntk::node_kernel(a, b),
            _ => panic!("prepared graphs of different kernel kinds"),
        }
    }

    /// Node kernel restricted to `rows × cols` of this graph's self-pair.
    pub fn node_block(&self, rows: &[usize], cols: &[usize], hp: &KernelHyperParams) -> DMatrix<f64> {
        match &self.0 {
            Prepared::Sgtk { x, roots } => {
                let (xr, rr) = select(x, roots, rows);
                let (xc, rc) = select(x, roots, cols);
                sgtk::node_kernel(&xr, &rr, &xc, &rc, hp)
            }
            Prepared::Sgnk { x, inv } => {
                let (xr, sr) = select(x, inv, rows);
                let (xc, sc) = select(x, inv, cols);
                sgnk::node_kernel(&xr, &sr, &xc, &sc, hp)
            }
            Prepared::Gntk(side) => {
                let full = gntk::node_kernel(side, side);
                DMatrix::from_fn(rows.len(), cols.len(), |i, j| full[(rows[i], cols[j])])
            }
        }
    }
}

fn propagated(g: &Graph, hp: &KernelHyperParams) -> Result<DMatrix<f64>> {
    propagate(&normalize_adjacency(g)?, g.features(), PropagationConfig::new(hp.k))
}

fn select(x: &DMatrix<f64>, aux: &[f64], idx: &[usize]) -> (DMatrix<f64>, Vec<f64>) {
    (x.select_rows(idx), idx.iter().map(|&i| aux[i]).collect())
}

/// Node-level kernel block `K(rows, cols)` of a single graph, without
/// materializing the full `n × n` matrix for the propagation kernels.
pub fn node_kernel_block(
    g: &Graph,
    kind: KernelKind,
    hp: &KernelHyperParams,
    rows: &[usize],
    cols: &[usize],
) -> Result<DMatrix<f64>> {
    for &i in rows.iter().chain(cols) {
        if i >= g.num_nodes() {
            return Err(Error::InvalidSplit(format!(
                "node index {i} out of range for {} nodes",
                g.num_nodes()
            )));
        }
    }
    Ok(PreparedGraph::new(g, kind, hp)?.node_block(rows, cols, hp))
}

/// Assembles the Gram matrix. Only the upper triangle is evaluated; the
/// lower triangle is its exact mirror. Each entry is computed by one thread
/// in a fixed order, so the result does not depend on the thread count.
pub fn gram_matrix(
    items: GramItems<'_>,
    kind: KernelKind,
    hp: &KernelHyperParams,
    dataset_fingerprint: &str,
) -> Result<GramMatrix> {
    hp.validate()?;
    let (values, item_level) = match items {
        GramItems::Nodes(g) => {
            let prepared = PreparedGraph::new(g, kind, hp)?;
            let mut m = prepared.node_kernel(&prepared, hp);
            mirror_upper(&mut m);
            (m, ItemLevel::Node)
        }
        GramItems::Graphs(graphs) => (graph_gram(graphs, kind, hp)?, ItemLevel::Graph),
    };
    Ok(GramMatrix {
        values,
        kind,
        hyperparams: *hp,
        item_level,
        dataset_fingerprint: dataset_fingerprint.to_owned(),
        notes: Default::default(),
    })
}

fn graph_gram(graphs: &[Graph], kind: KernelKind, hp: &KernelHyperParams) -> Result<DMatrix<f64>> {
    let first = graphs.first().ok_or(Error::EmptyInput("no graphs for Gram matrix"))?;
    for g in graphs {
        check_pair_inputs(first, g, hp)?;
    }
    let p = graphs.len();
    let prepare = |g: &Graph| PreparedGraph::new(g, kind, hp);
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| (i..p).map(move |j| (i, j))).collect();

    #[cfg(feature = "parallel")]
    let (prepared, values) = {
        use rayon::prelude::*;
        let prepared = graphs.par_iter().map(prepare).collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = pairs
            .par_iter()
            .with_min_len(32)
            .map(|&(i, j)| apply_readout(&prepared[i].node_kernel(&prepared[j], hp), hp.readout))
            .collect();
        (prepared, values)
    };
    #[cfg(not(feature = "parallel"))]
    let (prepared, values) = {
        let prepared = graphs.iter().map(prepare).collect::<Result<Vec<_>>>()?;
        let values: Vec<f64> = pairs
            .iter()
            .map(|&(i, j)| apply_readout(&prepared[i].node_kernel(&prepared[j], hp), hp.readout))
            .collect();
        (prepared, values)
    };
    drop(prepared);

    let mut m = DMatrix::zeros(p, p);
    for (&(i, j), &v) in pairs.iter().zip(&values) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize, d: usize) -> Graph {
        Graph::new(
            n,
            (1..n).map(|i| (i - 1, i)),
            DMatrix::from_fn(n, d, |i, j| ((i * 7 + j * 3) % 5) as f64 * 0.4 - 0.6),
        )
        .unwrap()
    }

    #[test]
    fn single_graph_gives_positive_scalar() {
        let gs = [path(3, 2)];
        for kind in KernelKind::ALL {
            let g = gram_matrix(GramItems::Graphs(&gs), kind, &KernelHyperParams::default(), "x").unwrap();
            assert_eq!(g.size(), 1);
            assert!(g.values[(0, 0)] > 0.0, "{kind}");
        }
    }

    #[test]
    fn identical_graphs_give_constant_matrix() {
        let gs = vec![path(4, 3); 3];
        for kind in KernelKind::ALL {
            let g = gram_matrix(GramItems::Graphs(&gs), kind, &KernelHyperParams::default(), "").unwrap();
            let v = g.values[(0, 0)];
            assert!(g.values.iter().all(|x| (x - v).abs() <= 1e-12 * v.abs()));
        }
    }

    #[test]
    fn gram_entries_match_pair_kernels() {
        let gs = [path(3, 2), path(5, 2), path(2, 2)];
        let hp = KernelHyperParams { k: 3, beta: 0.5, gntk_blocks: 2, ..Default::default() };
        for kind in KernelKind::ALL {
            let g = gram_matrix(GramItems::Graphs(&gs), kind, &hp, "").unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let v = kind.pair(&gs[i], &gs[j], &hp).unwrap().graph_value;
                    assert!((g.values[(i, j)] - v).abs() <= 1e-12 * v.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn empty_graph_list_is_rejected() {
        let r = gram_matrix(GramItems::Graphs(&[]), KernelKind::Sgnk, &KernelHyperParams::default(), "");
        assert!(matches!(r, Err(Error::EmptyInput(_))));
    }

    #[test]
    fn node_level_matches_pair_and_blocks() {
        let g = path(6, 3);
        let hp = KernelHyperParams { k: 2, gntk_blocks: 2, ..Default::default() };
        for kind in KernelKind::ALL {
            let gram = gram_matrix(GramItems::Nodes(&g), kind, &hp, "").unwrap();
            assert_eq!(gram.item_level, ItemLevel::Node);
            assert_eq!(gram.values, gram.values.transpose());
            let pair = kind.pair(&g, &g, &hp).unwrap().node_kernel;
            let block = node_kernel_block(&g, kind, &hp, &[4, 1], &[0, 5, 2]).unwrap();
            for (a, &i) in [4usize, 1].iter().enumerate() {
                for (b, &j) in [0usize, 5, 2].iter().enumerate() {
                    assert!((block[(a, b)] - pair[(i, j)]).abs() < 1e-12);
                    assert!((gram.values[(i, j)] - pair[(i, j)]).abs() < 1e-12);
                }
            }
        }
        assert!(node_kernel_block(&g, KernelKind::Sgnk, &hp, &[6], &[0]).is_err());
    }
}
