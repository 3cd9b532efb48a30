//! Recursive row/column doubling of small router matrices.

use super::TrafficMatrix;
use crate::error::{Error, Result};

fn check_alpha(alpha: f64) -> Result<()> {
    if (0.5..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

fn double_rows(tm: &TrafficMatrix, alpha: f64) -> TrafficMatrix {
    let mut out = TrafficMatrix::zeros(tm.rows() * 2, tm.cols());
    for r in 0..tm.rows() {
        for c in 0..tm.cols() {
            let v = tm.get(r, c);
            out.set(2 * r, c, alpha * v);
            out.set(2 * r + 1, c, (1.0 - alpha) * v);
        }
    }
    out
}

fn double_cols(tm: &TrafficMatrix, alpha: f64) -> TrafficMatrix {
    let mut out = TrafficMatrix::zeros(tm.rows(), tm.cols() * 2);
    for r in 0..tm.rows() {
        for c in 0..tm.cols() {
            let v = tm.get(r, c);
            out.set(r, 2 * c, alpha * v);
            out.set(r, 2 * c + 1, (1.0 - alpha) * v);
        }
    }
    out
}

/// Splits every row into (α, 1−α) sub-rows until another doubling would
/// exceed `target_rows`, then does the same for columns. No rescaling.
pub fn expand_tm(
    tm: &TrafficMatrix,
    alpha: f64,
    target_rows: usize,
    target_cols: usize,
) -> Result<TrafficMatrix> {
    check_alpha(alpha)?;
    if target_rows < tm.rows() || target_cols < tm.cols() {
        return Err(Error::DimensionMismatch(format!(
            "target {target_rows}x{target_cols} smaller than source {}x{}",
            tm.rows(),
            tm.cols()
        )));
    }
    let mut out = tm.clone();
    while out.rows() > 0 && out.rows() * 2 <= target_rows {
        out = double_rows(&out, alpha);
    }
    while out.cols() > 0 && out.cols() * 2 <= target_cols {
        out = double_cols(&out, alpha);
    }
    Ok(out)
}

/// Expands, zero-pads to the target shape and rescales so the most loaded
/// row or column is exactly at capacity.
pub fn resize_tm(
    tm: &TrafficMatrix,
    alpha: f64,
    target_rows: usize,
    target_cols: usize,
    col_capacity: f64,
) -> Result<TrafficMatrix> {
    let mut out = expand_tm(tm, alpha, target_rows, target_cols)?.padded(target_rows, target_cols);
    out.normalize(col_capacity);
    Ok(out)
}
