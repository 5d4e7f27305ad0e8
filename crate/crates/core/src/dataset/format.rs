//! Little-endian binary payloads: `GKE1` edges, `GKF1` features, `GKG1`
//! graph indicator.

use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn check_magic(bytes: &[u8], magic: &'static str, file: &Path) -> Result<()> {
    if bytes.len() < 4 {
        return Err(Error::Truncated {
            file: file.to_path_buf(),
            expected: 4,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != magic.as_bytes() {
        return Err(Error::BadMagic {
            file: file.to_path_buf(),
            expected: magic,
        });
    }
    Ok(())
}

fn check_len(bytes: &[u8], expected: usize, file: &Path) -> Result<()> {
    match bytes.len().cmp(&expected) {
        std::cmp::Ordering::Less => Err(Error::Truncated {
            file: file.to_path_buf(),
            expected,
            actual: bytes.len(),
        }),
        std::cmp::Ordering::Greater => Err(Error::InvalidDataset {
            file: file.to_path_buf(),
            reason: format!("{} trailing bytes", bytes.len() - expected),
        }),
        std::cmp::Ordering::Equal => Ok(()),
    }
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

pub fn encode_edges(edges: &[(u32, u32)]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * edges.len());
    out.extend_from_slice(b"GKE1");
    out.extend_from_slice(&(edges.len() as u64).to_le_bytes());
    for &(u, v) in edges {
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses an edge file, checking every endpoint against `num_nodes`.
pub fn decode_edges(bytes: &[u8], num_nodes: usize, file: &Path) -> Result<Vec<(u32, u32)>> {
    check_magic(bytes, "GKE1", file)?;
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            file: file.to_path_buf(),
            expected: 12,
            actual: bytes.len(),
        });
    }
    let count = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    check_len(bytes, 12 + 8 * count, file)?;
    let mut edges = Vec::with_capacity(count);
    for k in 0..count {
        let u = u32_at(bytes, 12 + 8 * k);
        let v = u32_at(bytes, 16 + 8 * k);
        for x in [u, v] {
            if x as usize >= num_nodes {
                return Err(Error::IndexOutOfRange {
                    file: file.to_path_buf(),
                    index: x as usize,
                    bound: num_nodes,
                });
            }
        }
        edges.push((u, v));
    }
    Ok(edges)
}

/// Features are stored as `f32`; values are rounded to `f32` on write.
pub fn encode_features(x: &DMatrix<f64>) -> Vec<u8> {
    let (rows, cols) = x.shape();
    let mut out = Vec::with_capacity(12 + 4 * rows * cols);
    out.extend_from_slice(b"GKF1");
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for i in 0..rows {
        for j in 0..cols {
            out.extend_from_slice(&(x[(i, j)] as f32).to_le_bytes());
        }
    }
    out
}

/// Parses a row-major `f32` feature file, widening to `f64`.
pub fn decode_features(bytes: &[u8], file: &Path) -> Result<DMatrix<f64>> {
    check_magic(bytes, "GKF1", file)?;
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            file: file.to_path_buf(),
            expected: 12,
            actual: bytes.len(),
        });
    }
    let rows = u32_at(bytes, 4) as usize;
    let cols = u32_at(bytes, 8) as usize;
    check_len(bytes, 12 + 4 * rows * cols, file)?;
    let mut x = DMatrix::zeros(rows, cols);
    let mut offset = 12;
    for i in 0..rows {
        for j in 0..cols {
            let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::InvalidDataset {
                    file: file.to_path_buf(),
                    reason: format!("non-finite feature at row {i}, column {j}"),
                });
            }
            x[(i, j)] = v as f64;
            offset += 4;
        }
    }
    Ok(x)
}

pub fn encode_indicator(graph_of_node: &[u32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 * graph_of_node.len());
    out.extend_from_slice(b"GKG1");
    for g in graph_of_node {
        out.extend_from_slice(&g.to_le_bytes());
    }
    out
}

/// Parses a graph indicator; ids must be non-decreasing and cover
/// `0..num_graphs` without gaps, so every graph is nonempty.
pub fn decode_indicator(bytes: &[u8], num_nodes: usize, num_graphs: usize, file: &Path) -> Result<Vec<u32>> {
    check_magic(bytes, "GKG1", file)?;
    check_len(bytes, 4 + 4 * num_nodes, file)?;
    let ids: Vec<u32> = (0..num_nodes).map(|k| u32_at(bytes, 4 + 4 * k)).collect();
    let mut expected_next = 0u32;
    for (node, &g) in ids.iter().enumerate() {
        if g as usize >= num_graphs {
            return Err(Error::IndexOutOfRange {
                file: file.to_path_buf(),
                index: g as usize,
                bound: num_graphs,
            });
        }
        if g > expected_next || (node > 0 && g < ids[node - 1]) {
            return Err(Error::InvalidDataset {
                file: file.to_path_buf(),
                reason: format!("graph ids must be non-decreasing without gaps (node {node} has id {g})"),
            });
        }
        if g == expected_next {
            expected_next += 1;
        }
    }
    if (expected_next as usize) != num_graphs {
        return Err(Error::InvalidDataset {
            file: file.to_path_buf(),
            reason: format!("{expected_next} graphs present, manifest declares {num_graphs}"),
        });
    }
    Ok(ids)
}
