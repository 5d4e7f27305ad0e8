//! GKM1 binary Gram files and CSV export.
//!
//! Layout: magic `GKM1`, `u32` size `p`, `u8` kernel tag, the upper triangle
//! (diagonal included) as row-major little-endian `f64`, then a JSON trailer
//! with the kernel kind, hyperparameters, and dataset fingerprint.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{GramMatrix, KernelKind};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"GKM1";

pub fn encode_gkm1(gram: &GramMatrix) -> Vec<u8> {
    let p = gram.size();
    let mut out = Vec::with_capacity(9 + 8 * p * (p + 1) / 2 + 256);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(p as u32).to_le_bytes());
    out.push(gram.kind.code());
    for i in 0..p {
        for j in i..p {
            out.extend_from_slice(&gram.values[(i, j)].to_le_bytes());
        }
    }
    out.extend_from_slice(&serde_json::to_vec(gram).expect("Gram metadata serializes"));
    out
}

pub fn decode_gkm1(bytes: &[u8], origin: &Path) -> Result<GramMatrix> {
    let invalid = |reason: String| Error::InvalidDataset {
        file: origin.to_path_buf(),
        reason,
    };
    if bytes.len() < 9 {
        return Err(Error::Truncated {
            file: origin.to_path_buf(),
            expected: 9,
            actual: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            file: origin.to_path_buf(),
            expected: "GKM1",
        });
    }
    let p = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let kind = KernelKind::from_code(bytes[8]).ok_or_else(|| invalid(format!("unknown kernel tag {}", bytes[8])))?;
    let body = 8 * p * (p + 1) / 2;
    if bytes.len() < 9 + body {
        return Err(Error::Truncated {
            file: origin.to_path_buf(),
            expected: 9 + body,
            actual: bytes.len(),
        });
    }
    let mut values = DMatrix::zeros(p, p);
    let mut chunks = bytes[9..9 + body].chunks_exact(8);
    for i in 0..p {
        for j in i..p {
            let v = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let mut gram: GramMatrix = serde_json::from_slice(&bytes[9 + body..]).map_err(|source| Error::Json {
        path: origin.to_path_buf(),
        source,
    })?;
    if gram.kind != kind {
        return Err(invalid(format!(
            "kernel tag {kind} disagrees with trailer kind {}",
            gram.kind
        )));
    }
    gram.values = values;
    Ok(gram)
}

pub fn write_gkm1(path: &Path, gram: &GramMatrix) -> Result<()> {
    fs::write(path, encode_gkm1(gram)).map_err(|e| Error::io(path, e))
}

pub fn read_gkm1(path: &Path) -> Result<GramMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_gkm1(&bytes, path)
}

/// Full matrix as CSV, preceded by one `#` line holding the JSON metadata.
pub fn write_csv(path: &Path, gram: &GramMatrix) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "# {}", serde_json::to_string(gram).expect("Gram metadata serializes")).unwrap();
    for i in 0..gram.size() {
        let row: Vec<String> = gram.values.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
