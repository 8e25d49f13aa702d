//! Field and jump-set files.
//!
//! A field is a JSON header plus a raw little-endian `f64` file holding one
//! block per component, each block in row-major cell order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::field::{DisplacementField, JumpSet};
use crate::grid::{Face, GridSpec};
use crate::FieldError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub dim: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub r: f64,
    pub components: usize,
    pub dtype: String,
    pub layout: String,
    pub data: String,
}

fn io_err(path: &Path, e: std::io::Error) -> FieldError {
    FieldError::Io(format!("{}: {e}", path.display()))
}

/// Writes `<stem>.json` and `<stem>.bin`; returns the header path.
pub fn write_field(stem: &Path, field: &DisplacementField) -> Result<PathBuf, FieldError> {
    let grid = field.grid();
    let header_path = stem.with_extension("json");
    let data_path = stem.with_extension("bin");
    let data_name = data_path.file_name().and_then(|n| n.to_str()).unwrap_or("field.bin").to_string();
    let header = FieldHeader {
        dim: grid.dim,
        m: grid.cells_per_side,
        r: grid.half_width,
        components: grid.dim,
        dtype: "f64-le".into(),
        layout: "cell-centered".into(),
        data: data_name,
    };
    let mut bytes = Vec::with_capacity(8 * grid.dim * grid.num_cells());
    for a in 0..grid.dim {
        for v in field.values() {
            bytes.extend_from_slice(&v[a].to_le_bytes());
        }
    }
    fs::write(&data_path, bytes).map_err(|e| io_err(&data_path, e))?;
    let json = serde_json::to_string_pretty(&header).map_err(|e| FieldError::Io(e.to_string()))?;
    fs::write(&header_path, json).map_err(|e| io_err(&header_path, e))?;
    Ok(header_path)
}

pub fn read_field(header_path: &Path) -> Result<DisplacementField, FieldError> {
    let text = fs::read_to_string(header_path).map_err(|e| io_err(header_path, e))?;
    let header: FieldHeader = serde_json::from_str(&text).map_err(|e| FieldError::Io(e.to_string()))?;
    if header.dtype != "f64-le" || header.components != header.dim {
        return Err(FieldError::Io(format!("unsupported field header {header:?}")));
    }
    let grid = if header.m.is_power_of_two() && header.m >= 8 {
        GridSpec::new(header.dim, header.m, header.r)?
    } else {
        GridSpec::small(header.dim, header.m, header.r)?
    };
    let data_path = header_path.with_file_name(&header.data);
    let bytes = fs::read(&data_path).map_err(|e| io_err(&data_path, e))?;
    let n = grid.num_cells();
    if bytes.len() != 8 * n * grid.dim {
        return Err(FieldError::ExtentMismatch { expected: 8 * n * grid.dim, got: bytes.len() });
    }
    let mut values = vec![[0.0; 3]; n];
    for (k, chunk) in bytes.chunks_exact(8).enumerate() {
        let x = f64::from_le_bytes(chunk.try_into().expect("chunk of 8 bytes"));
        values[k % n][k / n] = x;
    }
    DisplacementField::new(grid, values)
}

/// Jump sets are stored as `[[axis, [i, j(, k)]], ...]`.
pub fn jumps_to_json(jumps: &JumpSet) -> serde_json::Value {
    let grid = jumps.grid();
    let faces: Vec<serde_json::Value> = jumps
        .faces()
        .into_iter()
        .map(|f| {
            let c = grid.coords(f.cell);
            serde_json::json!([f.axis, &c[..grid.dim]])
        })
        .collect();
    serde_json::Value::Array(faces)
}

pub fn jumps_from_json(grid: GridSpec, value: &serde_json::Value) -> Result<JumpSet, FieldError> {
    let parsed: Vec<(usize, Vec<usize>)> =
        serde_json::from_value(value.clone()).map_err(|e| FieldError::Io(e.to_string()))?;
    let mut faces = Vec::with_capacity(parsed.len());
    for (axis, c) in parsed {
        if c.len() != grid.dim || c.iter().any(|&ci| ci >= grid.cells_per_side) {
            return Err(FieldError::Io(format!("bad cell tuple {c:?}")));
        }
        let mut cc = [0usize; 3];
        cc[..grid.dim].copy_from_slice(&c);
        faces.push(Face { axis, cell: grid.index(cc) });
    }
    JumpSet::from_faces(grid, faces)
}

pub fn write_jumps(path: &Path, jumps: &JumpSet) -> Result<(), FieldError> {
    let json = serde_json::to_string(&jumps_to_json(jumps)).map_err(|e| FieldError::Io(e.to_string()))?;
    fs::write(path, json).map_err(|e| io_err(path, e))
}

pub fn read_jumps(path: &Path, grid: GridSpec) -> Result<JumpSet, FieldError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| FieldError::Io(e.to_string()))?;
    jumps_from_json(grid, &value)
}
