//! PFI command schedules and the timing-rule checker.
//!
//! A frame occupies γ consecutive bank passes of t_S each. Pass `g` of a
//! frame in bank group `h` uses bank `γh + g` on all T channels at once:
//! one broadcast ACT at `data_start − t_RCD`, one WR (or RD) of S bytes per
//! channel at `data_start`, and one broadcast PRE at `data_start + t_S`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::config::{DerivedConfig, HbmTiming, SwitchConfig};
use crate::error::{Error, Result};

/// Slack for floating-point comparisons of command times, in ns.
pub const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CommandKind {
    #[serde(rename = "ACT")]
    Act,
    #[serde(rename = "WR")]
    Wr,
    #[serde(rename = "RD")]
    Rd,
    #[serde(rename = "PRE")]
    Pre,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Act => "ACT",
            CommandKind::Wr => "WR",
            CommandKind::Rd => "RD",
            CommandKind::Pre => "PRE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbmCommand {
    pub time_ns: f64,
    pub kind: CommandKind,
    /// `None` for commands broadcast to every channel.
    pub channel: Option<u32>,
    pub bank: u32,
    pub output: u32,
    pub frame_seq: u64,
    /// Segment index within the frame, `pass·T + channel`, for WR/RD.
    pub segment: Option<u32>,
}

/// Where a frame goes: output, per-output sequence number and bank group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameTag {
    pub output: u32,
    pub seq: u64,
    pub group: u64,
}

impl FrameTag {
    pub fn new(output: u32, seq: u64, bank_groups: u64) -> Self {
        FrameTag { output, seq, group: seq % bank_groups }
    }
}

/// ACT spacing inside the staggered schedule is t_S, so a legal schedule
/// needs `t_FAW ≤ 4·t_S`.
pub fn check_faw(timing: &HbmTiming, d: &DerivedConfig) -> Result<()> {
    if timing.t_faw_ns > 4.0 * d.t_segment_ns + TIME_EPS {
        return Err(Error::TimingInfeasible(format!(
            "t_FAW = {} ns exceeds four segment times ({} ns)",
            timing.t_faw_ns,
            4.0 * d.t_segment_ns
        )));
    }
    Ok(())
}

/// Back-to-back frames may hit the same bank group; bank `ℓ` is then reused
/// γ·t_S after its previous pass started, which needs
/// `t_RCD + t_RP ≤ (γ − 1)·t_S`.
pub fn check_group_reuse(cfg: &SwitchConfig, timing: &HbmTiming, d: &DerivedConfig) -> Result<()> {
    let slack = (cfg.gamma as f64 - 1.0) * d.t_segment_ns;
    if timing.t_rcd_ns + timing.t_rp_ns > slack + TIME_EPS {
        return Err(Error::TimingInfeasible(format!(
            "t_RCD + t_RP = {} ns exceeds (gamma - 1) * t_S = {} ns",
            timing.t_rcd_ns + timing.t_rp_ns,
            slack
        )));
    }
    Ok(())
}

fn frame_schedule(
    kind: CommandKind,
    tag: FrameTag,
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    d: &DerivedConfig,
    start_ns: f64,
) -> Vec<HbmCommand> {
    let t = cfg.channels() as u32;
    let mut out = Vec::with_capacity((cfg.gamma as usize) * (t as usize + 2));
    for g in 0..cfg.gamma {
        let bank = (cfg.gamma * tag.group + g) as u32;
        let data = start_ns + g as f64 * d.t_segment_ns;
        let base = HbmCommand {
            time_ns: data - timing.t_rcd_ns,
            kind: CommandKind::Act,
            channel: None,
            bank,
            output: tag.output,
            frame_seq: tag.seq,
            segment: None,
        };
        out.push(base);
        for c in 0..t {
            out.push(HbmCommand {
                time_ns: data,
                kind,
                channel: Some(c),
                segment: Some(g as u32 * t + c),
                ..base
            });
        }
        out.push(HbmCommand { time_ns: data + d.t_segment_ns, kind: CommandKind::Pre, ..base });
    }
    out
}

/// Commands writing one frame whose first data pass starts at `start_ns`.
pub fn pfi_write_schedule(
    tag: FrameTag,
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    d: &DerivedConfig,
    start_ns: f64,
) -> Result<Vec<HbmCommand>> {
    check_faw(timing, d)?;
    Ok(frame_schedule(CommandKind::Wr, tag, cfg, timing, d, start_ns))
}

/// Mirror of [`pfi_write_schedule`] with RD commands.
pub fn pfi_read_schedule(
    tag: FrameTag,
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    d: &DerivedConfig,
    start_ns: f64,
) -> Result<Vec<HbmCommand>> {
    check_faw(timing, d)?;
    Ok(frame_schedule(CommandKind::Rd, tag, cfg, timing, d, start_ns))
}

/// Violation counts from [`check_timing`]. All zero means the trace is legal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimingReport {
    pub commands: u64,
    /// More than four ACTs on one channel within a rolling t_FAW window.
    pub faw: u64,
    /// ACT on an open bank, or less than t_RP after its PRE.
    pub pre_before_act: u64,
    /// PRE of a closed bank, or data command on a closed bank / before t_RCD.
    pub bank_state: u64,
    /// Two data bursts overlapping on one channel.
    pub channel_overlap: u64,
    /// WR→RD or RD→WR switch on a channel without t_WTR / t_RTW between them.
    pub phase: u64,
}

impl TimingReport {
    pub fn violations(&self) -> u64 {
        self.faw + self.pre_before_act + self.bank_state + self.channel_overlap + self.phase
    }
}

/// Checks a command trace against the timing rules. Broadcast commands
/// (`channel = None`) apply to every channel.
pub fn check_timing(
    commands: &[HbmCommand],
    cfg: &SwitchConfig,
    timing: &HbmTiming,
    d: &DerivedConfig,
) -> TimingReport {
    let t_s = d.t_segment_ns;
    let mut rep = TimingReport { commands: commands.len() as u64, ..Default::default() };
    let mut cmds: Vec<&HbmCommand> = commands.iter().collect();
    // PRE before ACT at equal times, data after ACT.
    let order = |k: CommandKind| match k {
        CommandKind::Pre => 0,
        CommandKind::Act => 1,
        _ => 2,
    };
    cmds.sort_by(|a, b| a.time_ns.total_cmp(&b.time_ns).then(order(a.kind).cmp(&order(b.kind))));

    // tFAW on broadcast ACTs plus per-channel ACTs.
    let mut acts: HashMap<Option<u32>, Vec<f64>> = HashMap::new();
    for c in cmds.iter().filter(|c| c.kind == CommandKind::Act) {
        acts.entry(c.channel).or_default().push(c.time_ns);
    }
    let broadcast = acts.remove(&None).unwrap_or_default();
    let mut windows: Vec<Vec<f64>> = vec![broadcast.clone()];
    for (_, mut v) in acts {
        v.extend_from_slice(&broadcast);
        v.sort_by(f64::total_cmp);
        windows.push(v);
    }
    for v in &windows {
        let mut j = 0;
        for i in 0..v.len() {
            while v[i] - v[j] >= timing.t_faw_ns - TIME_EPS {
                j += 1;
            }
            if i + 1 - j > 4 {
                rep.faw += 1;
            }
        }
    }

    // Bank state machine per (channel, bank); broadcast touches all channels.
    let channels = cfg.channels() as u32;
    #[derive(Clone, Copy)]
    struct Bank {
        open_at: Option<f64>,
        pre_at: f64,
    }
    let mut banks: HashMap<(u32, u32), Bank> = HashMap::new();
    let mut last_data: HashMap<u32, (f64, CommandKind)> = HashMap::new();
    for c in &cmds {
        let targets: Vec<u32> = match c.channel {
            Some(ch) => vec![ch],
            None => (0..channels).collect(),
        };
        for ch in targets {
            let b = banks
                .entry((ch, c.bank))
                .or_insert(Bank { open_at: None, pre_at: f64::NEG_INFINITY });
            match c.kind {
                CommandKind::Act => {
                    if b.open_at.is_some() || c.time_ns < b.pre_at + timing.t_rp_ns - TIME_EPS {
                        rep.pre_before_act += 1;
                    }
                    b.open_at = Some(c.time_ns);
                }
                CommandKind::Pre => {
                    if b.open_at.is_none() {
                        rep.bank_state += 1;
                    }
                    b.open_at = None;
                    b.pre_at = c.time_ns;
                }
                CommandKind::Wr | CommandKind::Rd => {
                    match b.open_at {
                        Some(a) if c.time_ns >= a + timing.t_rcd_ns - TIME_EPS => {}
                        _ => rep.bank_state += 1,
                    }
                    if let Some(&(prev, kind)) = last_data.get(&ch) {
                        let gap = c.time_ns - (prev + t_s);
                        if gap < -TIME_EPS {
                            rep.channel_overlap += 1;
                        }
                        let need = match (kind, c.kind) {
                            (CommandKind::Wr, CommandKind::Rd) => timing.t_wtr_ns,
                            (CommandKind::Rd, CommandKind::Wr) => timing.t_rtw_ns,
                            _ => 0.0,
                        };
                        if gap < need - TIME_EPS {
                            rep.phase += 1;
                        }
                    }
                    last_data.insert(ch, (c.time_ns, c.kind));
                }
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::derive_and_validate;

    #[test]
    fn reference_frame_command_counts() {
        let cfg = SwitchConfig::reference();
        let tm = HbmTiming::reference();
        let d = derive_and_validate(&cfg, &tm).unwrap();
        let cmds = pfi_write_schedule(FrameTag::new(0, 0, 16), &cfg, &tm, &d, 100.0).unwrap();
        let count = |k| cmds.iter().filter(|c| c.kind == k).count();
        assert_eq!(count(CommandKind::Act), 4);
        assert_eq!(count(CommandKind::Pre), 4);
        assert_eq!(count(CommandKind::Wr), 512);
        let banks: Vec<u32> =
            cmds.iter().filter(|c| c.kind == CommandKind::Act).map(|c| c.bank).collect();
        assert_eq!(banks, vec![0, 1, 2, 3]);
        assert_eq!(check_timing(&cmds, &cfg, &tm, &d).violations(), 0);
    }

    #[test]
    fn faw_too_long_is_infeasible() {
        let cfg = SwitchConfig::reference();
        let tm = HbmTiming { t_faw_ns: 60.0, ..HbmTiming::reference() };
        let d = derive_and_validate(&cfg, &tm).unwrap();
        assert!(matches!(
            pfi_write_schedule(FrameTag::new(0, 0, 16), &cfg, &tm, &d, 0.0),
            Err(Error::TimingInfeasible(_))
        ));
    }

    #[test]
    fn checker_flags_each_rule() {
        let cfg = SwitchConfig::desk();
        let tm = HbmTiming::desk();
        let d = derive_and_validate(&cfg, &tm).unwrap();
        let mk = |time_ns, kind, channel, bank| HbmCommand {
            time_ns,
            kind,
            channel,
            bank,
            output: 0,
            frame_seq: 0,
            segment: None,
        };
        // Five ACTs 1 ns apart on distinct banks.
        let acts: Vec<HbmCommand> =
            (0..5).map(|b| mk(b as f64, CommandKind::Act, None, b)).collect();
        assert_eq!(check_timing(&acts, &cfg, &tm, &d).faw, 1);
        // ACT right after PRE on the same bank.
        let v = vec![
            mk(0.0, CommandKind::Act, None, 0),
            mk(5.0, CommandKind::Pre, None, 0),
            mk(5.5, CommandKind::Act, None, 0),
        ];
        assert_eq!(check_timing(&v, &cfg, &tm, &d).pre_before_act, 8);
        // WR then RD on channel 0 with no turnaround gap.
        let v = vec![
            mk(0.0, CommandKind::Act, None, 0),
            mk(1.6, CommandKind::Wr, Some(0), 0),
            mk(4.8, CommandKind::Rd, Some(0), 0),
        ];
        assert_eq!(check_timing(&v, &cfg, &tm, &d).phase, 1);
        // Overlapping bursts.
        let v = vec![
            mk(0.0, CommandKind::Act, None, 0),
            mk(1.6, CommandKind::Wr, Some(0), 0),
            mk(2.0, CommandKind::Wr, Some(0), 0),
        ];
        assert_eq!(check_timing(&v, &cfg, &tm, &d).channel_overlap, 1);
    }
}
