//! Rayon-parallel evaluation of residual grids.
//!
//! Nodes are split into fixed-size chunks evaluated independently and
//! concatenated in index order, so the result does not depend on the number
//! of threads.

use ergobound_core::certify::{GridShape, RegionGrid, Residual};
use ergobound_core::{CertifyError, PolyError};
use rayon::prelude::*;

const CHUNK: usize = 4096;

/// Residual values at every node of `shape`, x fastest.
pub fn evaluate_grid(residual: &Residual, shape: &GridShape) -> Result<Vec<f64>, CertifyError> {
    if shape.domain.dim() != residual.dim() {
        return Err(PolyError::DimensionMismatch {
            expected: residual.dim(),
            found: shape.domain.dim(),
        }
        .into());
    }
    let n = shape.len();
    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&start| shape.evaluate_range(residual, start..(start + CHUNK).min(n)))
        .collect();
    Ok(parts.concat())
}

/// Parallel counterpart of [`ergobound_core::certify::region_grid`].
pub fn region_grid(residual: &Residual, shape: &GridShape, threshold: f64) -> Result<RegionGrid, CertifyError> {
    if !(threshold > 0.0) {
        return Err(CertifyError::NonPositiveThreshold(threshold));
    }
    let values = evaluate_grid(residual, shape)?;
    RegionGrid::from_values(shape.clone(), values, threshold, residual.bound(), residual.identity().to_string())
}
