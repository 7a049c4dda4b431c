//! Gate files: JSON with either per-control blocks or the full two-site
//! matrix, both row major. serde_json writes doubles with the shortest
//! round-trip decimal representation.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{ControlledGate, LocalGate};

#[derive(Serialize, Deserialize)]
struct GateFile {
    q: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blocks: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<f64>>,
}

/// Row-major flattening of a matrix.
pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            out.push(m[(r, c)]);
        }
    }
    out
}

/// Nested row-major representation, one inner vector per row.
pub fn matrix_row_vecs(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

pub fn read_gate(path: &Path) -> Result<LocalGate> {
    let text = std::fs::read_to_string(path)?;
    parse_gate(&text)
}

pub fn parse_gate(text: &str) -> Result<LocalGate> {
    let file: GateFile = serde_json::from_str(text)?;
    let q = file.q;
    match (file.blocks, file.matrix) {
        (Some(blocks), None) => {
            if blocks.len() != q {
                return Err(Error::InvalidParameters(format!(
                    "expected {q} blocks, found {}",
                    blocks.len()
                )));
            }
            let blocks = blocks
                .into_iter()
                .map(|b| {
                    if b.len() != q * q {
                        return Err(Error::InvalidParameters(format!(
                            "block has {} entries, expected {}",
                            b.len(),
                            q * q
                        )));
                    }
                    Ok(DMatrix::from_row_slice(q, q, &b))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ControlledGate::new(blocks)?.assemble())
        }
        (None, Some(matrix)) => {
            let d = q * q;
            if matrix.len() != d * d {
                return Err(Error::InvalidParameters(format!(
                    "matrix has {} entries, expected {}",
                    matrix.len(),
                    d * d
                )));
            }
            LocalGate::new(q, DMatrix::from_row_slice(d, d, &matrix))
        }
        _ => Err(Error::InvalidParameters(
            "gate file needs exactly one of `blocks` or `matrix`".into(),
        )),
    }
}

pub fn write_gate_blocks(path: &Path, gate: &ControlledGate) -> Result<()> {
    let file = GateFile {
        q: gate.q(),
        blocks: Some(gate.blocks().iter().map(matrix_rows).collect()),
        matrix: None,
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}

pub fn write_gate_matrix(path: &Path, gate: &LocalGate) -> Result<()> {
    let file = GateFile {
        q: gate.q(),
        blocks: None,
        matrix: Some(matrix_rows(gate.matrix())),
    };
    std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
    Ok(())
}
