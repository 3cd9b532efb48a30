//! Architectural parameters, derived quantities and closed-form design figures.
//!
//! Units: rates in Gb/s, sizes in bytes, times in ns unless a field name says
//! otherwise. Loads elsewhere in the crate are in units of one wavelength.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unit of the `- N^2` correction term in the SRAM bound: it comes from the
/// per-port `- N` in the input-port bound, which counts bits.
pub const SRAM_CORRECTION_UNIT_BITS: u64 = 1;

/// Bytes per decimal megabyte, used when reporting SRAM sizes.
pub const MB: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwitchConfig {
    /// N, fiber ribbons (router ports).
    pub n_ports: u64,
    /// F, fibers per ribbon.
    pub fibers_per_port: u64,
    /// W, wavelengths per fiber.
    pub wavelengths_per_fiber: u64,
    /// R, Gb/s per wavelength.
    pub wavelength_gbps: f64,
    /// H, parallel HBM switches.
    pub switches: u64,
    /// B, HBM stacks per switch.
    pub stacks_per_switch: u64,
    pub channels_per_stack: u64,
    /// L, banks per channel.
    pub banks_per_channel: u64,
    /// γ, banks per interleaving group.
    pub gamma: u64,
    /// S, bytes per segment.
    pub segment_bytes: u64,
    pub sram_width_bits: u64,
    pub sram_clock_ghz: f64,
    pub hbm_bit_rate_gbps: f64,
}

impl Default for SwitchConfig {
    fn default() -> Self {
        SwitchConfig {
            n_ports: 16,
            fibers_per_port: 64,
            wavelengths_per_fiber: 16,
            wavelength_gbps: 40.0,
            switches: 16,
            stacks_per_switch: 4,
            channels_per_stack: 32,
            banks_per_channel: 64,
            gamma: 4,
            segment_bytes: 1024,
            sram_width_bits: 2048,
            sram_clock_ghz: 2.5,
            hbm_bit_rate_gbps: 10.0,
        }
    }
}

impl SwitchConfig {
    /// Reference design with N = 16 ribbons of 64 fibers.
    pub fn reference() -> Self {
        Self::default()
    }

    /// Small config used for slot-level simulation: N = 4, T = 8, L = 8, γ = 2,
    /// K = 4 KB, k = 256 B. Line rate per port is 640 Gb/s.
    pub fn desk() -> Self {
        SwitchConfig {
            n_ports: 4,
            fibers_per_port: 4,
            wavelengths_per_fiber: 16,
            wavelength_gbps: 40.0,
            switches: 4,
            stacks_per_switch: 1,
            channels_per_stack: 8,
            banks_per_channel: 8,
            gamma: 2,
            segment_bytes: 256,
            sram_width_bits: 512,
            sram_clock_ghz: 2.5,
            hbm_bit_rate_gbps: 10.0,
        }
    }

    pub fn alpha(&self) -> u64 {
        self.fibers_per_port / self.switches.max(1)
    }

    /// T, HBM channels per switch.
    pub fn channels(&self) -> u64 {
        self.stacks_per_switch * self.channels_per_stack
    }

    /// k, batch size in bytes.
    pub fn batch_bytes(&self) -> u64 {
        self.n_ports * self.sram_width_bits / 8
    }

    /// K, frame size in bytes.
    pub fn frame_bytes(&self) -> u64 {
        self.gamma * self.channels() * self.segment_bytes
    }

    pub fn bank_groups(&self) -> u64 {
        self.banks_per_channel / self.gamma.max(1)
    }

    /// Rows of a full-router traffic matrix: N·F·W input wavelengths.
    pub fn tm_rows(&self) -> usize {
        (self.n_ports * self.fibers_per_port * self.wavelengths_per_fiber) as usize
    }

    /// Column capacity of a full-router traffic matrix, in wavelengths.
    pub fn tm_col_capacity(&self) -> f64 {
        (self.fibers_per_port * self.wavelengths_per_fiber) as f64
    }

    /// Column capacity at one HBM switch, α·W wavelengths.
    pub fn switch_col_capacity(&self) -> f64 {
        (self.alpha() * self.wavelengths_per_fiber) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbmTiming {
    /// Transfers per RD/WR command.
    pub burst_length: u64,
    pub channel_width_bits: u64,
    pub row_bytes: u64,
    /// Rolling window allowing at most four ACTs per channel.
    pub t_faw_ns: f64,
    /// ACT to first data.
    pub t_rcd_ns: f64,
    /// PRE to next ACT on the same bank.
    pub t_rp_ns: f64,
    pub t_wtr_ns: f64,
    pub t_rtw_ns: f64,
    /// Extra idle time per interleaving cycle, as a fraction of the cycle.
    pub refresh_overhead: f64,
}

impl Default for HbmTiming {
    fn default() -> Self {
        HbmTiming {
            burst_length: 8,
            channel_width_bits: 64,
            row_bytes: 2048,
            t_faw_ns: 30.0,
            t_rcd_ns: 15.0,
            t_rp_ns: 15.0,
            // 0.05% of a 1638.4 ns cycle, split evenly.
            t_wtr_ns: 0.4096,
            t_rtw_ns: 0.4096,
            refresh_overhead: 0.0,
        }
    }
}

impl HbmTiming {
    pub fn reference() -> Self {
        Self::default()
    }

    /// Timing for [`SwitchConfig::desk`], where t_S = 3.2 ns.
    pub fn desk() -> Self {
        HbmTiming {
            row_bytes: 512,
            t_faw_ns: 12.0,
            t_rcd_ns: 1.6,
            t_rp_ns: 1.6,
            t_wtr_ns: 0.0128,
            t_rtw_ns: 0.0128,
            ..Self::default()
        }
    }

    pub fn burst_bytes(&self) -> u64 {
        self.burst_length * self.channel_width_bits / 8
    }
}

/// Anchors for the power, area and buffering estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisParams {
    pub stack_capacity_gb: f64,
    pub stack_power_w: f64,
    pub oeo_pj_per_bit: f64,
    /// Throughput of the reference switch chip used to scale processing power.
    pub anchor_tbps: f64,
    pub anchor_power_w: f64,
    pub die_area_mm2: f64,
    pub stack_side_mm: f64,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            stack_capacity_gb: 64.0,
            stack_power_w: 75.0,
            oeo_pj_per_bit: 1.15,
            anchor_tbps: 51.2,
            anchor_power_w: 500.0,
            die_area_mm2: 800.0,
            stack_side_mm: 11.0,
        }
    }
}

/// Full configuration file: `[switch]`, `[timing]`, `[analysis]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub switch: SwitchConfig,
    pub timing: HbmTiming,
    pub analysis: AnalysisParams,
}

impl Config {
    pub fn reference() -> Self {
        Self::default()
    }

    pub fn desk() -> Self {
        Config {
            switch: SwitchConfig::desk(),
            timing: HbmTiming::desk(),
            analysis: AnalysisParams::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivedConfig {
    pub alpha: u64,
    pub channels: u64,
    pub batch_bytes: u64,
    pub frame_bytes: u64,
    pub batches_per_frame: u64,
    pub bank_groups: u64,
    /// N·F·W·R.
    pub io_per_direction_gbps: f64,
    /// 2·N·F·W·R / H, both directions.
    pub io_per_switch_gbps: f64,
    /// P = α·W·R.
    pub port_rate_gbps: f64,
    /// Time to move S bytes over one channel in burst mode.
    pub t_segment_ns: f64,
    /// Time for one port to move sram_width_bits at rate P.
    pub line_slot_ns: f64,
    /// Simulation slot. A cycle without refresh serves every port at exactly
    /// one slot per SRAM word, so this is the base cycle divided by
    /// `G·K / (N·w)`; it sits slightly above `line_slot_ns` by the turnaround
    /// gaps.
    pub slot_ns: f64,
    /// 2L·t_S + t_WTR + t_RTW, plus refresh overhead.
    pub cycle_ns: f64,
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidConfig(what.to_string()))
    }
}

/// Validates every structural invariant and derives dependent quantities.
pub fn derive_and_validate(cfg: &SwitchConfig, timing: &HbmTiming) -> Result<DerivedConfig> {
    let ints = [
        ("n_ports", cfg.n_ports),
        ("fibers_per_port", cfg.fibers_per_port),
        ("wavelengths_per_fiber", cfg.wavelengths_per_fiber),
        ("switches", cfg.switches),
        ("stacks_per_switch", cfg.stacks_per_switch),
        ("channels_per_stack", cfg.channels_per_stack),
        ("banks_per_channel", cfg.banks_per_channel),
        ("gamma", cfg.gamma),
        ("segment_bytes", cfg.segment_bytes),
        ("sram_width_bits", cfg.sram_width_bits),
        ("burst_length", timing.burst_length),
        ("channel_width_bits", timing.channel_width_bits),
        ("row_bytes", timing.row_bytes),
    ];
    for (name, v) in ints {
        check(v > 0, &format!("{name} must be positive"))?;
    }
    let reals = [
        ("wavelength_gbps", cfg.wavelength_gbps),
        ("sram_clock_ghz", cfg.sram_clock_ghz),
        ("hbm_bit_rate_gbps", cfg.hbm_bit_rate_gbps),
    ];
    for (name, v) in reals {
        check(v.is_finite() && v > 0.0, &format!("{name} must be positive"))?;
    }
    let times = [
        ("t_faw_ns", timing.t_faw_ns),
        ("t_rcd_ns", timing.t_rcd_ns),
        ("t_rp_ns", timing.t_rp_ns),
        ("t_wtr_ns", timing.t_wtr_ns),
        ("t_rtw_ns", timing.t_rtw_ns),
        ("refresh_overhead", timing.refresh_overhead),
    ];
    for (name, v) in times {
        check(v.is_finite() && v >= 0.0, &format!("{name} must be non-negative"))?;
    }

    check(
        cfg.fibers_per_port % cfg.switches == 0,
        "alpha = F/H must be a positive integer",
    )?;
    check(
        cfg.sram_width_bits % 8 == 0,
        "sram_width_bits must be a whole number of bytes",
    )?;
    let k = cfg.batch_bytes();
    let big_k = cfg.frame_bytes();
    check(
        big_k % k == 0,
        "K/k (batches per frame) must be a positive integer",
    )?;
    check(
        cfg.banks_per_channel % cfg.gamma == 0,
        "L mod gamma must be 0",
    )?;
    check(cfg.gamma <= 4, "gamma must be at most 4 (four-activation window)")?;
    check(
        cfg.segment_bytes % timing.burst_bytes() == 0,
        "S must be a multiple of burst_length * channel_width_bits / 8",
    )?;
    check(
        timing.row_bytes % cfg.segment_bytes == 0,
        "S must divide the row size",
    )?;
    check(
        (cfg.segment_bytes * cfg.channels()) % cfg.n_ports == 0,
        "T*S must split evenly over the N head SRAM modules",
    )?;

    let alpha = cfg.alpha();
    let r = cfg.wavelength_gbps;
    let io_dir = (cfg.n_ports * cfg.fibers_per_port * cfg.wavelengths_per_fiber) as f64 * r;
    let port_rate = (alpha * cfg.wavelengths_per_fiber) as f64 * r;
    let t_segment = (cfg.segment_bytes * 8) as f64
        / (timing.channel_width_bits as f64 * cfg.hbm_bit_rate_gbps);
    let base_cycle = 2.0 * cfg.banks_per_channel as f64 * t_segment + timing.t_wtr_ns + timing.t_rtw_ns;
    Ok(DerivedConfig {
        alpha,
        channels: cfg.channels(),
        batch_bytes: k,
        frame_bytes: big_k,
        batches_per_frame: big_k / k,
        bank_groups: cfg.bank_groups(),
        io_per_direction_gbps: io_dir,
        io_per_switch_gbps: 2.0 * io_dir / cfg.switches as f64,
        port_rate_gbps: port_rate,
        t_segment_ns: t_segment,
        line_slot_ns: cfg.sram_width_bits as f64 / port_rate,
        slot_ns: base_cycle * (cfg.n_ports * cfg.sram_width_bits / 8) as f64
            / (cfg.bank_groups() * big_k) as f64,
        cycle_ns: base_cycle * (1.0 + timing.refresh_overhead),
    })
}

/// Per-component SRAM bounds, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SramBounds {
    pub inputs_bits: u64,
    pub tail_bits: u64,
    pub head_bits: u64,
    pub outputs_bits: u64,
}

impl SramBounds {
    pub fn total_bits(&self) -> u64 {
        self.inputs_bits + self.tail_bits + self.head_bits + self.outputs_bits
    }

    /// Total in bytes, rounded up.
    pub fn total_bytes(&self) -> u64 {
        self.total_bits().div_ceil(8)
    }
}

/// Upper bounds on SRAM occupancy. K and k enter in bits, so the `- N` per
/// input port is a bit count; the head bound `(N+1)/2 · K` is exact in bits
/// because K is a multiple of 16 bits.
pub fn sram_bounds(cfg: &SwitchConfig) -> SramBounds {
    let n = cfg.n_ports;
    let k = cfg.batch_bytes() * 8;
    let big_k = cfg.frame_bytes() * 8;
    let corr = SRAM_CORRECTION_UNIT_BITS;
    SramBounds {
        inputs_bits: n * (n * k + k - n * corr),
        tail_bits: n * big_k + big_k - n * k,
        head_bits: (n + 1) * big_k / 2,
        outputs_bits: 2 * n * k,
    }
}

/// Closed-form total `3/2 (N+1) K + (N+2) N k - N^2`, in bits.
pub fn sram_bound_closed_form_bits(cfg: &SwitchConfig) -> u64 {
    let n = cfg.n_ports;
    let k = cfg.batch_bytes() * 8;
    let big_k = cfg.frame_bytes() * 8;
    3 * (n + 1) * big_k / 2 + (n + 2) * n * k - n * n * SRAM_CORRECTION_UNIT_BITS
}

/// Total SRAM bound in bytes together with the four component bounds.
pub fn sram_bound_bytes(cfg: &SwitchConfig) -> (u64, SramBounds) {
    let b = sram_bounds(cfg);
    (b.total_bytes(), b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub buffer_ms: f64,
    pub buffer_tb: f64,
    pub processing_w: f64,
    pub hbm_w: f64,
    pub oeo_w: f64,
    pub power_w_per_switch: f64,
    pub power_kw_total: f64,
    pub area_mm2_per_switch: f64,
    pub area_mm2_total: f64,
    pub sram_bytes: u64,
    pub sram_mb: f64,
}

pub fn design_analysis(cfg: &SwitchConfig, p: &AnalysisParams) -> AnalysisReport {
    let n = cfg.n_ports as f64;
    let h = cfg.switches as f64;
    let b = cfg.stacks_per_switch as f64;
    let io_dir_tbps =
        (cfg.n_ports * cfg.fibers_per_port * cfg.wavelengths_per_fiber) as f64 * cfg.wavelength_gbps
            / 1000.0;
    let port_tbps = (cfg.alpha() * cfg.wavelengths_per_fiber) as f64 * cfg.wavelength_gbps / 1000.0;
    let buffer_tb = h * b * p.stack_capacity_gb / 1000.0;
    // TB·8 / (Tb/s) is seconds.
    let buffer_ms = buffer_tb * 8.0 / io_dir_tbps * 1000.0;
    let processing_w = p.anchor_power_w * (n * port_tbps / p.anchor_tbps);
    let hbm_w = b * p.stack_power_w;
    let io_switch_tbps = 2.0 * io_dir_tbps / h;
    // pJ/bit · Tb/s = W.
    let oeo_w = p.oeo_pj_per_bit * io_switch_tbps;
    let per_switch = processing_w + hbm_w + oeo_w;
    let area = p.die_area_mm2 + b * p.stack_side_mm * p.stack_side_mm;
    let (sram_bytes, _) = sram_bound_bytes(cfg);
    AnalysisReport {
        buffer_ms,
        buffer_tb,
        processing_w,
        hbm_w,
        oeo_w,
        power_w_per_switch: per_switch,
        power_kw_total: per_switch * h / 1000.0,
        area_mm2_per_switch: area,
        area_mm2_total: area * h,
        sram_bytes,
        sram_mb: sram_bytes as f64 / MB,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_derivation() {
        let d = derive_and_validate(&SwitchConfig::reference(), &HbmTiming::reference()).unwrap();
        assert_eq!(d.alpha, 4);
        assert_eq!(d.channels, 128);
        assert_eq!(d.batch_bytes, 4096);
        assert_eq!(d.frame_bytes, 524_288);
        assert_eq!(d.batches_per_frame, 128);
        assert_eq!(d.bank_groups, 16);
        assert!((d.io_per_direction_gbps - 655_360.0).abs() < 1e-6);
        assert!((d.io_per_switch_gbps - 81_920.0).abs() < 1e-6);
        assert!((d.port_rate_gbps - 2560.0).abs() < 1e-9);
        assert!((d.t_segment_ns - 12.8).abs() < 1e-12);
    }

    #[test]
    fn non_integer_alpha_rejected() {
        let cfg = SwitchConfig { switches: 5, ..SwitchConfig::reference() };
        let e = derive_and_validate(&cfg, &HbmTiming::reference()).unwrap_err();
        assert!(matches!(e, Error::InvalidConfig(ref m) if m.contains("alpha")));
    }

    #[test]
    fn minimal_config() {
        let cfg = SwitchConfig {
            n_ports: 1,
            fibers_per_port: 1,
            wavelengths_per_fiber: 1,
            wavelength_gbps: 1.0,
            switches: 1,
            stacks_per_switch: 1,
            channels_per_stack: 1,
            banks_per_channel: 1,
            gamma: 1,
            segment_bytes: 64,
            sram_width_bits: 512,
            ..SwitchConfig::reference()
        };
        let t = HbmTiming { row_bytes: 64, ..HbmTiming::reference() };
        let d = derive_and_validate(&cfg, &t).unwrap();
        assert_eq!(d.alpha, 1);
        assert_eq!(d.io_per_direction_gbps, 1.0);
    }

    #[test]
    fn gamma_and_banks_checked() {
        let t = HbmTiming::reference();
        let cfg = SwitchConfig { gamma: 8, banks_per_channel: 64, ..SwitchConfig::reference() };
        assert!(derive_and_validate(&cfg, &t).is_err());
        let cfg = SwitchConfig { banks_per_channel: 62, ..SwitchConfig::reference() };
        assert!(derive_and_validate(&cfg, &t).is_err());
        let cfg = SwitchConfig { segment_bytes: 1000, ..SwitchConfig::reference() };
        assert!(derive_and_validate(&cfg, &t).is_err());
    }

    #[test]
    fn desk_config_is_valid() {
        let d = derive_and_validate(&SwitchConfig::desk(), &HbmTiming::desk()).unwrap();
        assert_eq!(d.batch_bytes, 256);
        assert_eq!(d.frame_bytes, 4096);
        assert_eq!(d.batches_per_frame, 16);
        assert!((d.line_slot_ns - 0.8).abs() < 1e-12);
        assert!((d.t_segment_ns - 3.2).abs() < 1e-12);
        assert!((d.slot_ns * 64.0 - d.cycle_ns).abs() < 1e-9);
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = Config::desk();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(Config::from_toml(&text).unwrap(), c);
        let partial = Config::from_toml("[switch]\nn_ports = 8\n").unwrap();
        assert_eq!(partial.switch.n_ports, 8);
        assert_eq!(partial.switch.fibers_per_port, 64);
        assert!(Config::from_toml("[switch]\nbogus = 1\n").is_err());
    }
}
