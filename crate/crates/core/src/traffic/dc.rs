//! Cross-datacenter pipeline-parallel traffic on top of WAN background load.

use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::synthetic::{fill_synthetic, SyntheticParams};
use super::TrafficMatrix;
use crate::config::SwitchConfig;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LbScheme {
    #[serde(rename = "ecmp")]
    Ecmp,
    #[serde(rename = "rr")]
    RoundRobin,
    #[serde(rename = "ar")]
    Adaptive,
}

impl LbScheme {
    pub const ALL: [LbScheme; 3] = [LbScheme::Ecmp, LbScheme::RoundRobin, LbScheme::Adaptive];

    pub fn as_str(&self) -> &'static str {
        match self {
            LbScheme::Ecmp => "ecmp",
            LbScheme::RoundRobin => "rr",
            LbScheme::Adaptive => "ar",
        }
    }
}

impl FromStr for LbScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ecmp" => Ok(LbScheme::Ecmp),
            "rr" => Ok(LbScheme::RoundRobin),
            "ar" => Ok(LbScheme::Adaptive),
            _ => Err(Error::InvalidConfig(format!("unknown lb scheme '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcWorkloadParams {
    pub n_dcs: usize,
    /// GPU flows per DC stage; the stage's traffic is split evenly over them.
    pub m_gpus: usize,
    /// Fraction of the port capacity F·W·R a DC sends.
    pub alpha_dc: f64,
    /// Probability that a time sample carries DC communication.
    pub beta_comm: f64,
    pub max_wavelength_load: f64,
    pub lb_scheme: LbScheme,
    pub n_time_samples: usize,
    pub seed: u64,
    /// Background traffic; `rho` caps each wavelength including DC load.
    pub wan: SyntheticParams,
}

impl Default for DcWorkloadParams {
    fn default() -> Self {
        DcWorkloadParams {
            n_dcs: 8,
            m_gpus: 512,
            alpha_dc: 1.0,
            beta_comm: 0.2,
            max_wavelength_load: 0.95,
            lb_scheme: LbScheme::Adaptive,
            n_time_samples: 10,
            seed: 0,
            wan: SyntheticParams { rho: 0.95, ..SyntheticParams::default() },
        }
    }
}

/// One time sample with the metadata used to build it.
#[derive(Debug, Clone, PartialEq)]
pub struct DcSample {
    pub tm: TrafficMatrix,
    pub communicating: bool,
    pub forward: bool,
    /// Port of each DC stage, in stage order.
    pub dc_ports: Vec<usize>,
    /// DC load per matrix row, before WAN fill.
    pub dc_row_load: Vec<f64>,
}

fn validate(p: &DcWorkloadParams, cfg: &SwitchConfig) -> Result<()> {
    let n = cfg.n_ports as usize;
    if p.n_dcs > n {
        return Err(Error::TooManyDcs { n_dcs: p.n_dcs, ports: n });
    }
    for (name, v) in [
        ("alpha_dc", p.alpha_dc),
        ("beta_comm", p.beta_comm),
        ("max_wavelength_load", p.max_wavelength_load),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidConfig(format!("{name} = {v} outside [0, 1]")));
        }
    }
    if p.m_gpus == 0 {
        return Err(Error::InvalidConfig("m_gpus must be positive".into()));
    }
    Ok(())
}

/// Row offset within a port for the `slot`-th round-robin position. Slots
/// walk across fibers first so consecutive flows land on different fibers.
fn rr_offset(slot: usize, fibers: usize, wavelengths: usize) -> usize {
    let fiber = slot % fibers;
    let w = (slot / fibers) % wavelengths;
    fiber * wavelengths + w
}

/// Per-wavelength load of one sending DC, before capping.
fn spread<R: Rng + ?Sized>(
    p: &DcWorkloadParams,
    fibers: usize,
    wavelengths: usize,
    rng: &mut R,
) -> Vec<f64> {
    let fw = fibers * wavelengths;
    let total = p.alpha_dc * fw as f64;
    let flow = total / p.m_gpus as f64;
    let mut load = vec![0.0; fw];
    match p.lb_scheme {
        LbScheme::Ecmp => {
            for _ in 0..p.m_gpus {
                load[rng.random_range(0..fw)] += flow;
            }
        }
        LbScheme::RoundRobin => {
            for f in 0..p.m_gpus {
                load[rr_offset(f, fibers, wavelengths)] += flow;
            }
        }
        LbScheme::Adaptive => load.iter_mut().for_each(|l| *l = total / fw as f64),
    }
    load
}

/// Full generator output, one [`DcSample`] per time sample.
pub fn gen_dc_workload_detailed(p: &DcWorkloadParams, cfg: &SwitchConfig) -> Result<Vec<DcSample>> {
    validate(p, cfg)?;
    let n = cfg.n_ports as usize;
    let f = cfg.fibers_per_port as usize;
    let w = cfg.wavelengths_per_fiber as usize;
    let fw = f * w;
    let rows = cfg.tm_rows();
    let cap = cfg.tm_col_capacity();

    let mut place_rng = seed::rng_for(p.seed, "dc-placement", 0);
    let dc_ports: Vec<usize> = sample(&mut place_rng, n, p.n_dcs).into_vec();

    let wan = SyntheticParams { wavelength_gbps: cfg.wavelength_gbps, ..p.wan.clone() };
    let row_limit = vec![wan.rho; rows];
    let col_limit = wan.col_limits(n, cap);

    let mut out = Vec::with_capacity(p.n_time_samples);
    for t in 0..p.n_time_samples {
        let mut comm_rng = seed::rng_for(p.seed, "dc-comm", t as u64);
        let communicating = comm_rng.random_bool(p.beta_comm);
        let forward = comm_rng.random_bool(0.5);
        let mut lb_rng = seed::rng_for(p.seed, "dc-lb", t as u64);
        let mut tm = TrafficMatrix::zeros(rows, n);
        if communicating {
            for stage in 0..p.n_dcs {
                let next = if forward {
                    stage + 1
                } else if stage == 0 {
                    continue;
                } else {
                    stage - 1
                };
                if next >= p.n_dcs {
                    continue;
                }
                let (src, dst) = (dc_ports[stage], dc_ports[next]);
                for (off, l) in spread(p, f, w, &mut lb_rng).into_iter().enumerate() {
                    if l > 0.0 {
                        tm.add(src * fw + off, dst, l.min(p.max_wavelength_load));
                    }
                }
            }
        }
        let dc_row_load = tm.row_sums();
        let mut wan_rng = seed::rng_for(p.seed, "dc-wan", t as u64);
        fill_synthetic(&mut tm, &row_limit, &col_limit, &wan, &mut wan_rng);
        if !tm.is_admissible(cap) {
            return Err(Error::Invariant(format!("DC sample {t} is not admissible")));
        }
        out.push(DcSample { tm, communicating, forward, dc_ports: dc_ports.clone(), dc_row_load });
    }
    Ok(out)
}

/// One traffic matrix per time sample.
pub fn gen_dc_workload(p: &DcWorkloadParams, cfg: &SwitchConfig) -> Result<Vec<TrafficMatrix>> {
    Ok(gen_dc_workload_detailed(p, cfg)?.into_iter().map(|s| s.tm).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rr_walks_fibers_first() {
        assert_eq!(rr_offset(0, 4, 3), 0);
        assert_eq!(rr_offset(1, 4, 3), 3);
        assert_eq!(rr_offset(4, 4, 3), 1);
        assert_eq!(rr_offset(12, 4, 3), 0);
    }
}
