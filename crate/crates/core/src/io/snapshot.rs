//! Binary field snapshots.
//!
//! Layout: one ASCII header line
//!
//! ```text
//! CHEMOFLUX v1 <kind> <cells...> <extents...> <N>\n
//! ```
//!
//! followed by the cell values as little-endian `f64`, in storage order
//! (x fastest). The payload is exactly `8 * cell_count` bytes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{make_grid, GridKind, GridSpec, ScalarField};

const MAGIC: &str = "CHEMOFLUX";
const VERSION: &str = "v1";

pub fn header_line(spec: &GridSpec<f64>) -> String {
    let mut parts = vec![MAGIC.to_string(), VERSION.to_string(), spec.kind.to_string()];
    parts.extend(spec.cells.iter().map(|c| c.to_string()));
    parts.extend(spec.extents.iter().map(|e| e.to_string()));
    parts.push(spec.dim.to_string());
    parts.join(" ")
}

pub fn encode_snapshot(field: &ScalarField<f64>, spec: &GridSpec<f64>) -> Result<Vec<u8>> {
    if field.grid_id() != spec.id() {
        return Err(Error::GridMismatch);
    }
    let mut out = header_line(spec).into_bytes();
    out.push(b'\n');
    out.reserve(8 * field.len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(ScalarField<f64>, GridSpec<f64>)> {
    let nl = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| Error::Snapshot("missing header line".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| Error::Snapshot("header is not UTF-8".into()))?;
    let tokens: Vec<&str> = header.split(' ').collect();
    if tokens.len() < 2 || tokens[0] != MAGIC {
        return Err(Error::Snapshot(format!("bad magic in `{header}`")));
    }
    if tokens[1] != VERSION {
        return Err(Error::Snapshot(format!("unsupported version `{}`", tokens[1])));
    }
    let kind: GridKind = tokens.get(2).ok_or_else(|| Error::Snapshot("missing grid kind".into()))?.parse()?;
    let axes = kind.axes();
    if tokens.len() != 3 + 2 * axes + 1 {
        return Err(Error::Snapshot(format!("header `{header}` has {} fields", tokens.len())));
    }
    let bad = |t: &str| Error::Snapshot(format!("bad header field `{t}`"));
    let cells = tokens[3..3 + axes].iter().map(|t| t.parse::<usize>().map_err(|_| bad(t))).collect::<Result<Vec<_>>>()?;
    let extents =
        tokens[3 + axes..3 + 2 * axes].iter().map(|t| t.parse::<f64>().map_err(|_| bad(t))).collect::<Result<Vec<_>>>()?;
    let dim_tok = tokens[3 + 2 * axes];
    let dim = dim_tok.parse::<usize>().map_err(|_| bad(dim_tok))?;
    let spec = GridSpec { kind, extents, cells, dim };
    let grid = make_grid(spec.clone())?;

    let payload = &bytes[nl + 1..];
    let expected = 8 * grid.cell_count();
    if payload.len() != expected {
        return Err(Error::Snapshot(format!("payload has {} bytes, expected {expected}", payload.len())));
    }
    let values =
        payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    Ok((ScalarField::from_values(&grid, values)?, spec))
}

pub fn write_snapshot(field: &ScalarField<f64>, spec: &GridSpec<f64>, path: &Path) -> Result<()> {
    fs::write(path, encode_snapshot(field, spec)?)?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<(ScalarField<f64>, GridSpec<f64>)> {
    decode_snapshot(&fs::read(path)?)
}
