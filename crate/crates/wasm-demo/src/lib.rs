//! wasm-bindgen bindings behind `www/index.html`.

pub mod ops;

use gk_core::KernelKind;
use wasm_bindgen::prelude::*;

fn js_err(e: gk_core::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn kind(name: &str) -> Result<KernelKind, JsError> {
    name.parse().map_err(js_err)
}

/// Square heatmap handed to JS. `values` is row-major.
#[wasm_bindgen]
pub struct Heatmap(ops::Heatmap);

#[wasm_bindgen]
impl Heatmap {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.0.size
    }

    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.0.values.clone()
    }

    #[wasm_bindgen(getter = minEigenvalue)]
    pub fn min_eigenvalue(&self) -> f64 {
        self.0.diagnostics.min_eigenvalue
    }

    #[wasm_bindgen(getter = maxEigenvalue)]
    pub fn max_eigenvalue(&self) -> f64 {
        self.0.diagnostics.max_eigenvalue
    }

    #[wasm_bindgen(getter = maxAsymmetry)]
    pub fn max_asymmetry(&self) -> f64 {
        self.0.diagnostics.max_asymmetry
    }

    #[wasm_bindgen(getter)]
    pub fn valid(&self) -> bool {
        self.0.diagnostics.is_valid()
    }
}

/// Flat `[λ, value, derivative]` triples for `"relu"` or `"erf"`.
#[wasm_bindgen(js_name = activationCurves)]
pub fn activation_curves(activation: &str, samples: usize) -> Result<Vec<f64>, JsError> {
    let act = ops::parse_activation(activation).map_err(js_err)?;
    ops::activation_curves(act, samples).map_err(js_err)
}

#[wasm_bindgen(js_name = randomGraphGram)]
pub fn random_graph_gram(kind_name: &str, depth: usize, count: usize, max_nodes: usize, seed: u32) -> Result<Heatmap, JsError> {
    ops::random_graph_gram(kind(kind_name)?, depth, count, max_nodes, u64::from(seed))
        .map(Heatmap)
        .map_err(js_err)
}

#[wasm_bindgen(js_name = nodeKernel)]
pub fn node_kernel(kind_name: &str, depth: usize, edges: &str) -> Result<Heatmap, JsError> {
    ops::node_kernel(kind(kind_name)?, depth, edges).map(Heatmap).map_err(js_err)
}

#[wasm_bindgen(js_name = maxGraphs)]
pub fn max_graphs() -> usize {
    ops::MAX_GRAPHS
}

#[wasm_bindgen(js_name = maxNodes)]
pub fn max_nodes() -> usize {
    ops::MAX_NODES
}
