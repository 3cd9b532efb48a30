//! Ideal FIFO output-queued shared-memory switch, and comparators that check
//! the HBM switch against it.
//!
//! Both switches use the same output line model: a packet that becomes
//! available in slot `t` starts at byte-time `max(line_free, w·(t+1))` and
//! departs in the slot holding its last byte. In the ideal switch a packet is
//! available in its arrival slot.

use serde::{Deserialize, Serialize};

use crate::config::{HbmTiming, SwitchConfig};
use crate::error::{Error, Result};
use crate::hbm::{place, HbmSwitch, Packet, SimOptions, SimTrace, MAX_PACKET, MIN_PACKET};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleTrace {
    /// Departure slot per packet, in workload order.
    pub departures: Vec<u64>,
}

/// Runs the ideal switch. Ties at an output go by arrival slot, then id.
pub fn run_oracle(packets: &[Packet], cfg: &SwitchConfig) -> Result<OracleTrace> {
    let n = cfg.n_ports as usize;
    let w = cfg.sram_width_bits / 8;
    place(packets, n, w, (MIN_PACKET, MAX_PACKET))?;
    Ok(OracleTrace { departures: oq_departures(packets, n, w) })
}

/// Departure slots without validation.
pub fn oq_departures(packets: &[Packet], n: usize, w: u64) -> Vec<u64> {
    let mut order: Vec<usize> = (0..packets.len()).collect();
    order.sort_by_key(|&i| (packets[i].arrival_slot, packets[i].id));
    let mut free = vec![0u64; n];
    let mut dep = vec![0; packets.len()];
    for i in order {
        let p = &packets[i];
        let end = free[p.output].max(w * (p.arrival_slot + 1)) + p.size;
        free[p.output] = end;
        dep[i] = end.div_ceil(w) - 1;
    }
    dep
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MimicReport {
    pub slots: u64,
    pub packets: usize,
    /// Packets still inside the HBM switch at the end.
    pub undelivered: usize,
    /// Max of `hbm − oracle` departure over delivered packets.
    pub max_delay_diff: i64,
    /// Running lag max `M(t)` at the half-way slot and at the end. A packet
    /// that left the ideal switch by `t` contributes `min(d_hbm, t) − d_oq`.
    pub lag_at_half: u64,
    pub lag_at_end: u64,
    /// `lag_at_end ≤ lag_at_half`.
    pub bounded: bool,
}

/// Running lag max at slot `t`, see [`MimicReport`].
fn lag_at(oracle: &[u64], hbm: &[Option<u64>], t: u64) -> u64 {
    oracle
        .iter()
        .zip(hbm)
        .filter(|(&o, _)| o <= t)
        .map(|(&o, h)| h.unwrap_or(u64::MAX).min(t).saturating_sub(o))
        .max()
        .unwrap_or(0)
}

/// Compares two finished runs on the same workload.
pub fn mimic_report(oracle: &OracleTrace, hbm: &SimTrace) -> Result<MimicReport> {
    if oracle.departures.len() != hbm.departures.len() {
        return Err(Error::WorkloadMismatch(format!(
            "oracle has {} packets, HBM run has {}",
            oracle.departures.len(),
            hbm.departures.len()
        )));
    }
    let end = hbm.slots.saturating_sub(1);
    let half = hbm.slots / 2;
    let max_delay_diff = oracle
        .departures
        .iter()
        .zip(&hbm.departures)
        .filter_map(|(&o, h)| h.map(|h| h as i64 - o as i64))
        .max()
        .unwrap_or(0);
    let lag_at_half = lag_at(&oracle.departures, &hbm.departures, half);
    let lag_at_end = lag_at(&oracle.departures, &hbm.departures, end);
    Ok(MimicReport {
        slots: hbm.slots,
        packets: oracle.departures.len(),
        undelivered: hbm.departures.iter().filter(|d| d.is_none()).count(),
        max_delay_diff,
        lag_at_half,
        lag_at_end,
        bounded: lag_at_end <= lag_at_half,
    })
}

/// Runs both switches on `packets` and compares them.
pub fn compare_mimic(
    packets: &[Packet],
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    opts: SimOptions,
) -> Result<(MimicReport, OracleTrace, SimTrace)> {
    let hbm = HbmSwitch::new(cfg, timing, opts)?.run(packets)?;
    let oracle = run_oracle(packets, cfg)?;
    let rep = mimic_report(&oracle, &hbm)?;
    Ok((rep, oracle, hbm))
}

pub const SLOPE_TOLERANCE: f64 = 1e-3;
pub const RATE_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThroughputReport {
    /// `B(t) = (D_SM(t) − D_HBM(t)) / w` in cells, every `stride` slots.
    pub gap: Vec<f64>,
    pub stride: u64,
    pub max_gap: f64,
    /// Least-squares slope of `B` over the final half, cells per slot.
    pub final_half_slope: f64,
    /// Departed / arrived bytes per output over the run (1 when idle).
    pub output_rate_ratio: Vec<f64>,
    pub bounded: bool,
    pub rates_ok: bool,
}

impl ThroughputReport {
    pub fn pass(&self) -> bool {
        self.bounded && self.rates_ok
    }
}

fn slope(ys: &[(f64, f64)]) -> f64 {
    let n = ys.len() as f64;
    if ys.len() < 2 {
        return 0.0;
    }
    let mx = ys.iter().map(|p| p.0).sum::<f64>() / n;
    let my = ys.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = ys.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = ys.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Throughput comparison of two finished runs. Rates compare departed bytes
/// with bytes arrived up to `slots − settle` so that packets still in flight
/// at the end do not count against the switch.
pub fn throughput_report(
    packets: &[Packet],
    oracle: &OracleTrace,
    hbm: &SimTrace,
    stride: u64,
    settle: u64,
) -> Result<ThroughputReport> {
    if oracle.departures.len() != packets.len() || hbm.departures.len() != packets.len() {
        return Err(Error::WorkloadMismatch("traces do not match the workload".into()));
    }
    let slots = hbm.slots;
    let w = hbm.bytes_per_slot as f64;
    let stride = stride.max(1);
    let buckets = slots.div_ceil(stride) as usize;
    let mut diff = vec![0i64; buckets + 1];
    let mut n_out = 0;
    for (i, p) in packets.iter().enumerate() {
        n_out = n_out.max(p.output + 1);
        let o = oracle.departures[i];
        if o < slots {
            diff[(o / stride) as usize] += p.size as i64;
        }
        if let Some(h) = hbm.departures[i] {
            diff[(h / stride) as usize] -= p.size as i64;
        }
    }
    let mut gap = Vec::with_capacity(buckets);
    let mut acc = 0i64;
    for d in diff.iter().take(buckets) {
        acc += d;
        gap.push(acc as f64 / w);
    }
    let half = gap.len() / 2;
    let pts: Vec<(f64, f64)> =
        gap[half..].iter().enumerate().map(|(i, &g)| (((half + i) as u64 * stride) as f64, g)).collect();
    let final_half_slope = slope(&pts);
    let max_gap = gap.iter().copied().fold(0.0, f64::max);

    let cutoff = slots.saturating_sub(settle);
    let mut arrived = vec![0u64; n_out];
    let mut departed = vec![0u64; n_out];
    for (i, p) in packets.iter().enumerate() {
        if p.arrival_slot < cutoff {
            arrived[p.output] += p.size;
            if hbm.departures[i].is_some() {
                departed[p.output] += p.size;
            }
        }
    }
    let output_rate_ratio: Vec<f64> = arrived
        .iter()
        .zip(&departed)
        .map(|(&a, &d)| if a == 0 { 1.0 } else { d as f64 / a as f64 })
        .collect();
    let rates_ok = output_rate_ratio.iter().all(|r| (r - 1.0).abs() <= RATE_TOLERANCE);
    Ok(ThroughputReport {
        gap,
        stride,
        max_gap,
        final_half_slope,
        output_rate_ratio,
        bounded: final_half_slope < SLOPE_TOLERANCE,
        rates_ok,
    })
}

/// Runs both switches and checks throughput.
pub fn throughput_check(
    packets: &[Packet],
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    opts: SimOptions,
) -> Result<ThroughputReport> {
    let hbm = HbmSwitch::new(cfg, timing, opts)?.run(packets)?;
    let oracle = run_oracle(packets, cfg)?;
    let settle = 4 * cfg.frame_bytes() / (cfg.sram_width_bits / 8) * cfg.bank_groups();
    throughput_report(packets, &oracle, &hbm, 64, settle)
}
