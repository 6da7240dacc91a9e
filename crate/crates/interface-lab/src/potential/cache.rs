//! Binary cache for assembled Dirichlet–Neumann matrices.
//!
//! Format: a 17-byte header — curve spectrum hash (`u64` little-endian),
//! node count (`u64` little-endian), side flag (`0` interior, `1`
//! exterior) — followed by `n²` row-major `f64` little-endian entries.
//! A stale hash is reported as a miss, not an error; a malformed file is
//! an error.

use super::{operators_for, Side};
use crate::curve::ClosedCurve;
use crate::error::{GeometryError, Result};
use nalgebra::DMatrix;
use std::fs;
use std::path::Path;

/// Writes the assembled DtN matrix for one side of the curve.
pub fn write_dtn_cache(path: &Path, curve: &ClosedCurve, side: Side) -> Result<()> {
    let ops = operators_for(curve)?;
    let m = ops.dtn_matrix(side)?;
    let n = curve.n_nodes();
    let mut bytes = Vec::with_capacity(17 + 8 * n * n);
    bytes.extend_from_slice(&curve.spectrum_hash().to_le_bytes());
    bytes.extend_from_slice(&(n as u64).to_le_bytes());
    bytes.push(side.flag_byte());
    for i in 0..n {
        for j in 0..n {
            bytes.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a cached DtN matrix. `Ok(None)` means the file belongs to a
/// different curve or side (a cache miss); malformed contents are errors.
pub fn read_dtn_cache(path: &Path, curve: &ClosedCurve, side: Side) -> Result<Option<DMatrix<f64>>> {
    let bytes = match fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    if bytes.len() < 17 {
        return Err(GeometryError::BadFormat(format!(
            "cache file too short ({} bytes)",
            bytes.len()
        ))
        .into());
    }
    let hash = u64::from_le_bytes(bytes[0..8].try_into().unwrap());
    let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let flag = bytes[16];
    if flag > 1 {
        return Err(GeometryError::BadFormat(format!("bad side flag {flag}")).into());
    }
    if bytes.len() != 17 + 8 * n * n {
        return Err(GeometryError::BadFormat(format!(
            "cache payload has {} bytes, expected {} for n = {n}",
            bytes.len() - 17,
            8 * n * n
        ))
        .into());
    }
    if hash != curve.spectrum_hash() || n != curve.n_nodes() || flag != side.flag_byte() {
        return Ok(None);
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let off = 17 + 8 * (i * n + j);
            m[(i, j)] = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        }
    }
    Ok(Some(m))
}

/// Loads the DtN matrix from the cache if it matches, assembling and
/// refreshing the file otherwise.
pub fn dtn_matrix_cached(path: &Path, curve: &ClosedCurve, side: Side) -> Result<DMatrix<f64>> {
    if let Some(m) = read_dtn_cache(path, curve, side)? {
        return Ok(m);
    }
    write_dtn_cache(path, curve, side)?;
    let ops = operators_for(curve)?;
    Ok(ops.dtn_matrix(side)?.clone())
}
