//! Split-parallel switch at fluid level.
//!
//! Each input ribbon's F fibers are spread over H HBM switches, α per switch.
//! A switch forwards everything up to α·W wavelengths per output and drops
//! the excess. Row `port·F·W + fiber·W + w` of a router matrix is wavelength
//! `w` of fiber `fiber` on input `port`.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SwitchConfig;
use crate::error::{Error, Result};
use crate::seed;
use crate::traffic::TrafficMatrix;

/// Fibers assigned to each (input, switch) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberAssignment {
    /// `groups[input][switch]` lists the α fibers of `input` wired to `switch`.
    pub groups: Vec<Vec<Vec<usize>>>,
}

impl FiberAssignment {
    pub fn switches(&self) -> usize {
        self.groups.first().map_or(0, |g| g.len())
    }

    /// Fiber `f` of every input goes to switch `f / α`.
    pub fn in_order(cfg: &SwitchConfig) -> Self {
        let fibers: Vec<usize> = (0..cfg.fibers_per_port as usize).collect();
        Self::from_orders(cfg, (0..cfg.n_ports).map(|_| fibers.clone()).collect())
    }

    fn from_orders(cfg: &SwitchConfig, orders: Vec<Vec<usize>>) -> Self {
        let a = cfg.alpha() as usize;
        let groups = orders
            .into_iter()
            .map(|o| o.chunks(a).map(|c| c.to_vec()).collect())
            .collect();
        FiberAssignment { groups }
    }

    /// Per input, a uniformly random permutation of the fibers cut into H
    /// groups of α.
    pub fn random<R: Rng + ?Sized>(cfg: &SwitchConfig, rng: &mut R) -> Self {
        let orders = (0..cfg.n_ports)
            .map(|_| {
                let mut o: Vec<usize> = (0..cfg.fibers_per_port as usize).collect();
                o.shuffle(rng);
                o
            })
            .collect();
        Self::from_orders(cfg, orders)
    }
}

pub fn make_assignment(cfg: &SwitchConfig, seed: u64) -> FiberAssignment {
    FiberAssignment::random(cfg, &mut seed::rng_for(seed, "assignment", 0))
}

/// Splits a router matrix into the H per-switch matrices of N·α·W rows each.
pub fn split_tm(
    tm: &TrafficMatrix,
    a: &FiberAssignment,
    cfg: &SwitchConfig,
) -> Result<Vec<TrafficMatrix>> {
    let (n, f, w) = (
        cfg.n_ports as usize,
        cfg.fibers_per_port as usize,
        cfg.wavelengths_per_fiber as usize,
    );
    if tm.rows() != n * f * w || tm.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{}, config expects {}x{}",
            tm.rows(),
            tm.cols(),
            n * f * w,
            n
        )));
    }
    if a.groups.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "assignment covers {} inputs, config has {n}",
            a.groups.len()
        )));
    }
    let h = a.switches();
    let subs = (0..h)
        .map(|s| {
            let idx: Vec<usize> = (0..n)
                .flat_map(|p| {
                    a.groups[p][s]
                        .iter()
                        .flat_map(move |&fib| (0..w).map(move |l| p * f * w + fib * w + l))
                })
                .collect();
            tm.select_rows(&idx)
        })
        .collect();
    Ok(subs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchLoss {
    pub drops: Vec<f64>,
    pub arrivals: f64,
    pub dropped: f64,
    pub loss_rate: f64,
}

fn loss_from_cols(col_sums: &[f64], arrivals: f64, capacity: f64) -> SwitchLoss {
    let drops: Vec<f64> = col_sums.iter().map(|&c| (c - capacity).max(0.0)).collect();
    let dropped: f64 = drops.iter().sum();
    SwitchLoss {
        drops,
        arrivals,
        dropped,
        loss_rate: if arrivals > 0.0 { dropped / arrivals } else { 0.0 },
    }
}

/// Output `j` drops `max(0, colsum_j − capacity)`; capacity is α·W.
pub fn fluid_loss(sub: &TrafficMatrix, capacity: f64) -> SwitchLoss {
    loss_from_cols(&sub.col_sums(), sub.total(), capacity)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    /// Fresh random fiber assignment per trial.
    #[serde(rename = "fiber-split")]
    FiberSplit,
    /// Fiber f to switch f/α on every input, every trial.
    #[serde(rename = "first-fiber")]
    FirstFiber,
    /// Each matrix cell goes to a uniformly random switch.
    #[serde(rename = "flow-random")]
    FlowRandom,
}

impl EvalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalMode::FiberSplit => "fiber-split",
            EvalMode::FirstFiber => "first-fiber",
            EvalMode::FlowRandom => "flow-random",
        }
    }
}

impl FromStr for EvalMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fiber-split" => Ok(EvalMode::FiberSplit),
            "first-fiber" => Ok(EvalMode::FirstFiber),
            "flow-random" => Ok(EvalMode::FlowRandom),
            _ => Err(Error::InvalidConfig(format!("unknown mode '{s}'"))),
        }
    }
}

/// How several router matrices are normalized before evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    #[serde(rename = "none")]
    None,
    /// One factor for all routers: the most loaded row or column anywhere hits 1.
    #[serde(rename = "global")]
    Global,
    #[serde(rename = "per-router")]
    PerRouter,
}

impl FromStr for Scaling {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Scaling::None),
            "global" => Ok(Scaling::Global),
            "per-router" => Ok(Scaling::PerRouter),
            _ => Err(Error::InvalidConfig(format!("unknown scaling '{s}'"))),
        }
    }
}

pub fn apply_scaling(tms: &mut [TrafficMatrix], col_capacity: f64, scaling: Scaling) {
    match scaling {
        Scaling::None => {}
        Scaling::PerRouter => tms.iter_mut().for_each(|t| {
            t.normalize(col_capacity);
        }),
        Scaling::Global => {
            let u = tms
                .iter()
                .map(|t| t.max_utilization(col_capacity))
                .fold(0.0, f64::max);
            if u > 0.0 {
                tms.iter_mut().for_each(|t| t.scale(1.0 / u));
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialStats {
    pub mean: f64,
    pub max: f64,
}

impl TrialStats {
    fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return TrialStats::default();
        }
        TrialStats {
            mean: xs.iter().sum::<f64>() / xs.len() as f64,
            max: xs.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub mode: EvalMode,
    pub n_trials: usize,
    pub seed: u64,
    pub n_routers: usize,
    /// Per switch index: drops over arrivals, pooled over routers and trials.
    pub per_switch_loss: Vec<f64>,
    /// Per router: loss rate averaged over trials.
    pub router_loss_rate: Vec<f64>,
    /// Mean of the per-router loss rates, statistics over trials.
    pub avg_router_loss_rate: TrialStats,
    /// Total drops over total arrivals across routers, statistics over trials.
    pub network_loss_rate: TrialStats,
    pub per_trial_network_loss: Vec<f64>,
}

struct TrialResult {
    router_drop: Vec<f64>,
    router_arrival: Vec<f64>,
    switch_drop: Vec<f64>,
    switch_arrival: Vec<f64>,
}

fn run_trial(
    tms: &[TrafficMatrix],
    cfg: &SwitchConfig,
    mode: EvalMode,
    seed: u64,
    trial: usize,
) -> Result<TrialResult> {
    let h = cfg.switches as usize;
    let cap = cfg.switch_col_capacity();
    let mut rng = seed::rng_for(seed, "trial", trial as u64);
    let mut r = TrialResult {
        router_drop: vec![0.0; tms.len()],
        router_arrival: vec![0.0; tms.len()],
        switch_drop: vec![0.0; h],
        switch_arrival: vec![0.0; h],
    };
    for (i, tm) in tms.iter().enumerate() {
        let losses: Vec<SwitchLoss> = match mode {
            EvalMode::FlowRandom => {
                let mut cols = vec![vec![0.0; tm.cols()]; h];
                let mut arr = vec![0.0; h];
                for row in 0..tm.rows() {
                    for (c, &v) in tm.row(row).iter().enumerate() {
                        if v > 0.0 {
                            let s = rng.random_range(0..h);
                            cols[s][c] += v;
                            arr[s] += v;
                        }
                    }
                }
                (0..h).map(|s| loss_from_cols(&cols[s], arr[s], cap)).collect()
            }
            EvalMode::FiberSplit | EvalMode::FirstFiber => {
                let a = if mode == EvalMode::FirstFiber {
                    FiberAssignment::in_order(cfg)
                } else {
                    FiberAssignment::random(cfg, &mut rng)
                };
                split_tm(tm, &a, cfg)?.iter().map(|s| fluid_loss(s, cap)).collect()
            }
        };
        for (s, l) in losses.iter().enumerate() {
            r.router_drop[i] += l.dropped;
            r.router_arrival[i] += l.arrivals;
            r.switch_drop[s] += l.dropped;
            r.switch_arrival[s] += l.arrivals;
        }
    }
    Ok(r)
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

/// Monte-Carlo loss over `n_trials` assignments. Trial `i` draws from the
/// stream `(seed, "trial", i)`; results are combined in trial order.
pub fn evaluate(
    tms: &[TrafficMatrix],
    cfg: &SwitchConfig,
    n_trials: usize,
    seed: u64,
    mode: EvalMode,
) -> Result<LossReport> {
    let h = cfg.switches as usize;
    #[cfg(feature = "parallel")]
    let results: Vec<Result<TrialResult>> = {
        use rayon::prelude::*;
        (0..n_trials)
            .into_par_iter()
            .map(|t| run_trial(tms, cfg, mode, seed, t))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<TrialResult>> =
        (0..n_trials).map(|t| run_trial(tms, cfg, mode, seed, t)).collect();

    let mut sw_drop = vec![0.0; h];
    let mut sw_arr = vec![0.0; h];
    let mut router_sum = vec![0.0; tms.len()];
    let mut avg_router = Vec::with_capacity(n_trials);
    let mut network = Vec::with_capacity(n_trials);
    for r in results {
        let r = r?;
        for s in 0..h {
            sw_drop[s] += r.switch_drop[s];
            sw_arr[s] += r.switch_arrival[s];
        }
        let rates: Vec<f64> = (0..tms.len())
            .map(|i| ratio(r.router_drop[i], r.router_arrival[i]))
            .collect();
        for (acc, x) in router_sum.iter_mut().zip(&rates) {
            *acc += x;
        }
        avg_router.push(if rates.is_empty() {
            0.0
        } else {
            rates.iter().sum::<f64>() / rates.len() as f64
        });
        network.push(ratio(
            r.router_drop.iter().sum(),
            r.router_arrival.iter().sum(),
        ));
    }
    let nt = n_trials.max(1) as f64;
    Ok(LossReport {
        mode,
        n_trials,
        seed,
        n_routers: tms.len(),
        per_switch_loss: (0..h).map(|s| ratio(sw_drop[s], sw_arr[s])).collect(),
        router_loss_rate: router_sum.iter().map(|x| x / nt).collect(),
        avg_router_loss_rate: TrialStats::of(&avg_router),
        network_loss_rate: TrialStats::of(&network),
        per_trial_network_loss: network,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn in_order_groups() {
        let cfg = SwitchConfig::reference();
        let a = FiberAssignment::in_order(&cfg);
        assert_eq!(a.switches(), 16);
        assert_eq!(a.groups[3][2], vec![8, 9, 10, 11]);
    }

    #[test]
    fn direct_loss_formula() {
        let l = loss_from_cols(&[1.2, 0.5], 1.7, 1.0);
        assert!((l.loss_rate - 0.2 / 1.7).abs() < 1e-15);
    }
}
