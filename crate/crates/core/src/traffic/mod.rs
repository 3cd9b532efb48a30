//! Traffic matrices and the generators that build them.
//!
//! A traffic matrix has one row per input wavelength and one column per
//! output port. Loads are in units of one wavelength's capacity, so a row sum
//! is at most 1 and a column sum at most the column capacity (F·W for a full
//! router, α·W at one HBM switch).

mod dc;
mod flows;
mod resize;
mod synthetic;

pub use dc::{gen_dc_workload, gen_dc_workload_detailed, DcSample, DcWorkloadParams, LbScheme};
pub use flows::{tm_from_flows, FlowRecord, HashName};
pub use resize::{expand_tm, resize_tm};
pub use synthetic::{
    build_synthetic_tm, fill_synthetic, sample_flow_rate, FlowRateDist, SyntheticParams,
    ZipfOutputs,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used by admissibility assertions on floating-point sums.
pub const ADMISSIBLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficMatrix {
    rows: usize,
    cols: usize,
    load: Vec<f64>,
}

impl TrafficMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        TrafficMatrix { rows, cols, load: vec![0.0; rows * cols] }
    }

    /// Builds from row-major data; fails on ragged input or negative cells.
    pub fn from_rows(data: &[Vec<f64>]) -> Result<Self> {
        let rows = data.len();
        let cols = data.first().map_or(0, |r| r.len());
        let mut load = Vec::with_capacity(rows * cols);
        for (i, r) in data.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            for (j, &v) in r.iter().enumerate() {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::NegativeLoad { row: i, column: j, value: v });
                }
                load.push(v);
            }
        }
        Ok(TrafficMatrix { rows, cols, load })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.load[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(v >= 0.0);
        self.load[r * self.cols + c] = v;
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.load[r * self.cols + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.load[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.load
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r).iter().enumerate() {
                s[c] += v;
            }
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.row_sums().iter().sum()
    }

    pub fn scale(&mut self, f: f64) {
        for v in &mut self.load {
            *v *= f;
        }
    }

    /// `max(max row sum, max column sum / col_capacity)`.
    pub fn max_utilization(&self, col_capacity: f64) -> f64 {
        let r = self.row_sums().into_iter().fold(0.0, f64::max);
        let c = self.col_sums().into_iter().fold(0.0, f64::max) / col_capacity;
        r.max(c)
    }

    /// Scales so the most loaded row or column sits exactly at capacity.
    /// Returns the factor applied; an all-zero matrix is left unchanged.
    pub fn normalize(&mut self, col_capacity: f64) -> f64 {
        let u = self.max_utilization(col_capacity);
        if u > 0.0 {
            self.scale(1.0 / u);
            1.0 / u
        } else {
            1.0
        }
    }

    pub fn is_admissible(&self, col_capacity: f64) -> bool {
        self.row_sums().iter().all(|&s| s <= 1.0 + ADMISSIBLE_EPS)
            && self
                .col_sums()
                .iter()
                .all(|&s| s <= col_capacity * (1.0 + ADMISSIBLE_EPS))
    }

    /// Keeps the rows listed in `idx`, in that order.
    pub fn select_rows(&self, idx: &[usize]) -> TrafficMatrix {
        let mut load = Vec::with_capacity(idx.len() * self.cols);
        for &r in idx {
            load.extend_from_slice(self.row(r));
        }
        TrafficMatrix { rows: idx.len(), cols: self.cols, load }
    }

    /// Zero-pads to a larger shape, keeping existing cells in place.
    pub fn padded(&self, rows: usize, cols: usize) -> TrafficMatrix {
        assert!(rows >= self.rows && cols >= self.cols);
        let mut out = TrafficMatrix::zeros(rows, cols);
        for r in 0..self.rows {
            out.load[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
        }
        out
    }
}
