//! Grid caching: a self-describing JSON header next to a flat binary
//! array file (little-endian 64-bit floats, row-major).
//!
//! Layout of `<prefix>.bin`: the volume weights (`node_count` values)
//! followed by the node coordinates (`node_count * dim` values).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{build_grid, ManifoldGrid, ManifoldKind, ManifoldSpec};

#[derive(Debug, Serialize, Deserialize)]
struct GridHeader {
    kind: ManifoldKind,
    resolution: Vec<usize>,
    length: f64,
    node_count: usize,
    dim: usize,
    ricci_lambda: f64,
    dtype: String,
    byte_order: String,
    layout: String,
}

/// Writes `<prefix>.json` and `<prefix>.bin`.
pub fn save_grid(grid: &ManifoldGrid, prefix: &Path) -> Result<()> {
    let header = GridHeader {
        kind: grid.kind(),
        resolution: grid.shape().to_vec(),
        length: grid.length(),
        node_count: grid.node_count(),
        dim: grid.dim(),
        ricci_lambda: grid.ricci_lambda(),
        dtype: "f64".into(),
        byte_order: "le".into(),
        layout: "row-major".into(),
    };
    fs::write(prefix.with_extension("json"), serde_json::to_string_pretty(&header)?)?;
    let mut bin = Vec::with_capacity(8 * grid.node_count() * (1 + grid.dim()));
    for w in grid.vol_weights() {
        bin.extend_from_slice(&w.to_le_bytes());
    }
    for node in grid.nodes() {
        for c in node {
            bin.extend_from_slice(&c.to_le_bytes());
        }
    }
    let mut f = fs::File::create(prefix.with_extension("bin"))?;
    f.write_all(&bin)?;
    Ok(())
}

/// Reads a grid saved by [`save_grid`], rebuilding the operators from the
/// header and verifying the stored arrays against the rebuilt grid.
pub fn load_grid(prefix: &Path) -> Result<ManifoldGrid> {
    let header: GridHeader =
        serde_json::from_str(&fs::read_to_string(prefix.with_extension("json"))?)?;
    if header.dtype != "f64" || header.byte_order != "le" {
        return Err(Error::InvalidSpec(format!(
            "unsupported grid encoding {}/{}",
            header.dtype, header.byte_order
        )));
    }
    let grid = build_grid(&ManifoldSpec {
        kind: header.kind,
        resolution: header.resolution,
        length: header.length,
    })?;
    if grid.node_count() != header.node_count || grid.dim() != header.dim {
        return Err(Error::InvalidSpec("grid header does not match rebuilt grid".into()));
    }
    let mut bin = Vec::new();
    fs::File::open(prefix.with_extension("bin"))?.read_to_end(&mut bin)?;
    let expected = 8 * header.node_count * (1 + header.dim);
    if bin.len() != expected {
        return Err(Error::InvalidSpec(format!(
            "grid binary has {} bytes, expected {expected}",
            bin.len()
        )));
    }
    let mut floats = bin.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    for w in grid.vol_weights() {
        let stored = floats.next().unwrap();
        if (stored - w).abs() > 1e-12 * w.abs().max(1.0) {
            return Err(Error::InvalidSpec("stored weights disagree with rebuilt grid".into()));
        }
    }
    Ok(grid)
}
