//! Balls-and-bins synthetic WAN traffic.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::TrafficMatrix;
use crate::seed;

/// Log-normal flow rates in Mb/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRateDist {
    pub mu: f64,
    pub sigma: f64,
}

impl Default for FlowRateDist {
    fn default() -> Self {
        FlowRateDist { mu: -4.2, sigma: 2.06 }
    }
}

impl FlowRateDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        (self.mu + self.sigma * z).exp()
    }

    pub fn median(&self) -> f64 {
        self.mu.exp()
    }

    pub fn mean(&self) -> f64 {
        (self.mu + self.sigma * self.sigma / 2.0).exp()
    }
}

/// One draw from the default WAN flow-rate distribution, in Mb/s.
pub fn sample_flow_rate<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    FlowRateDist::default().sample(rng)
}

/// Output ranks drawn with `P(k) ∝ 1/k^s`, k = 1..=n.
#[derive(Debug, Clone)]
pub struct ZipfOutputs {
    cdf: Vec<f64>,
}

impl ZipfOutputs {
    pub fn new(n: usize, s: f64) -> Self {
        let w: Vec<f64> = (1..=n).map(|k| (k as f64).powf(-s)).collect();
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = w
            .iter()
            .map(|x| {
                acc += x / total;
                acc
            })
            .collect();
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        ZipfOutputs { cdf }
    }

    /// Zero-based output index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn probability(&self, k: usize) -> f64 {
        if k == 0 {
            self.cdf[0]
        } else {
            self.cdf[k] - self.cdf[k - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// Per-wavelength load limit ρ.
    pub rho: f64,
    /// Zipf exponent s over output ranks.
    pub zipf_s: f64,
    /// R, used to convert Mb/s flows into wavelength units.
    pub wavelength_gbps: f64,
    /// Flows below this fraction of a wavelength are redrawn.
    pub rate_floor: f64,
    /// Consecutive rejected flows that end the packing.
    pub max_failures: u32,
    pub dist: FlowRateDist,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            rho: 1.0,
            zipf_s: 1.0,
            wavelength_gbps: 40.0,
            rate_floor: 1e-6,
            max_failures: 30,
            dist: FlowRateDist::default(),
        }
    }
}

impl SyntheticParams {
    /// Column limits `col_capacity · ρ / k^s`.
    pub fn col_limits(&self, cols: usize, col_capacity: f64) -> Vec<f64> {
        (1..=cols)
            .map(|k| col_capacity * self.rho / (k as f64).powf(self.zipf_s))
            .collect()
    }
}

/// Packs flows into `tm` until `max_failures` consecutive flows fail to fit.
/// A flow fits when its row stays within `row_limit` and its column within
/// `col_limit`, counting load already present. Returns the flows inserted.
pub fn fill_synthetic<R: Rng + ?Sized>(
    tm: &mut TrafficMatrix,
    row_limit: &[f64],
    col_limit: &[f64],
    p: &SyntheticParams,
    rng: &mut R,
) -> u64 {
    assert_eq!(row_limit.len(), tm.rows());
    assert_eq!(col_limit.len(), tm.cols());
    let rows = tm.rows();
    let zipf = ZipfOutputs::new(tm.cols(), p.zipf_s);
    let mut row_sum = tm.row_sums();
    let mut col_sum = tm.col_sums();
    let per_wavelength_mbps = p.wavelength_gbps * 1000.0;
    let mut failures = 0;
    let mut inserted = 0;
    while failures < p.max_failures {
        let load = loop {
            let x = p.dist.sample(rng) / per_wavelength_mbps;
            if x >= p.rate_floor {
                break x;
            }
        };
        let r = rng.random_range(0..rows);
        let c = zipf.sample(rng);
        if row_sum[r] + load <= row_limit[r] && col_sum[c] + load <= col_limit[c] {
            row_sum[r] += load;
            col_sum[c] += load;
            tm.add(r, c, load);
            failures = 0;
            inserted += 1;
        } else {
            failures += 1;
        }
    }
    inserted
}

/// Synthetic admissible matrix with every row at most ρ and output k at most
/// `col_capacity · ρ / k^s`.
pub fn build_synthetic_tm(
    p: &SyntheticParams,
    rows: usize,
    cols: usize,
    col_capacity: f64,
    seed: u64,
) -> TrafficMatrix {
    let mut rng = seed::rng_for(seed, "synthetic-tm", 0);
    let mut tm = TrafficMatrix::zeros(rows, cols);
    let row_limit = vec![p.rho; rows];
    let col_limit = p.col_limits(cols, col_capacity);
    fill_synthetic(&mut tm, &row_limit, &col_limit, p, &mut rng);
    debug_assert!(tm.is_admissible(col_capacity));
    tm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_sigma_gives_median() {
        let d = FlowRateDist { mu: -4.2, sigma: 0.0 };
        let mut rng = seed::rng_for(1, "t", 0);
        for _ in 0..10 {
            assert_eq!(d.sample(&mut rng), (-4.2f64).exp());
        }
    }

    #[test]
    fn zipf_probabilities() {
        let z = ZipfOutputs::new(4, 1.0);
        let h = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
        for k in 0..4 {
            assert!((z.probability(k) - 1.0 / ((k + 1) as f64 * h)).abs() < 1e-12);
        }
        let u = ZipfOutputs::new(5, 0.0);
        assert!((u.probability(3) - 0.2).abs() < 1e-12);
    }
}
