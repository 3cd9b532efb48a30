//! Packet streams and the input line model.
//!
//! Slot `t` covers byte-times `(w·t, w·(t+1)]` on a port, where `w` is the
//! SRAM width in bytes. A packet with `arrival_slot = a` finishes arriving
//! during slot `a`: its last byte lands at `e = max(e_prev + size, w·a + 1)`,
//! where `e_prev` is the previous packet's end on the same input.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::SwitchConfig;
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub id: u64,
    pub input: usize,
    pub output: usize,
    pub size: u64,
    pub arrival_slot: u64,
}

pub const MIN_PACKET: u64 = 64;
pub const MAX_PACKET: u64 = 9216;

/// Byte-time placement of a packet on its input line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinePlacement {
    /// Byte-time of the last byte (1-based within the line).
    pub end: u64,
    /// Offset of the first byte within the (input, output) stream.
    pub stream_offset: u64,
}

/// Checks ordering, ports, sizes and the input line rate, and places every
/// packet on its line. `w` is bytes per slot.
pub fn place(
    packets: &[Packet],
    n_ports: usize,
    w: u64,
    size_bounds: (u64, u64),
) -> Result<Vec<LinePlacement>> {
    let mut line_end = vec![0u64; n_ports];
    let mut stream = vec![0u64; n_ports * n_ports];
    let mut ids = std::collections::HashSet::with_capacity(packets.len());
    let mut prev_slot = 0;
    let mut out = Vec::with_capacity(packets.len());
    for p in packets {
        if p.input >= n_ports || p.output >= n_ports {
            return Err(Error::InvalidWorkload(format!(
                "packet {} uses port outside 0..{n_ports}",
                p.id
            )));
        }
        if p.size < size_bounds.0 || p.size > size_bounds.1 {
            return Err(Error::InvalidWorkload(format!(
                "packet {} has size {} outside [{}, {}]",
                p.id, p.size, size_bounds.0, size_bounds.1
            )));
        }
        if p.arrival_slot < prev_slot {
            return Err(Error::InvalidWorkload(format!(
                "packet {} is out of arrival order",
                p.id
            )));
        }
        prev_slot = p.arrival_slot;
        if !ids.insert(p.id) {
            return Err(Error::InvalidWorkload(format!("duplicate packet id {}", p.id)));
        }
        let e = (line_end[p.input] + p.size).max(w * p.arrival_slot + 1);
        if e > w * (p.arrival_slot + 1) || e < p.size {
            return Err(Error::RateViolation { id: p.id, input: p.input });
        }
        line_end[p.input] = e;
        let s = &mut stream[p.input * n_ports + p.output];
        out.push(LinePlacement { end: e, stream_offset: *s });
        *s += p.size;
    }
    Ok(out)
}

/// Splits `total` bytes into packets from `sizes`, each batch of `k` bytes
/// filled exactly. `k` must be a multiple of the smallest size.
fn batch_aligned_sizes<R: Rng + ?Sized>(rng: &mut R, total: u64, k: u64, sizes: &[u64]) -> Vec<u64> {
    let mut out = Vec::new();
    let mut left_in_batch = k;
    let mut left = total;
    while left > 0 {
        let fit: Vec<u64> = sizes.iter().copied().filter(|&s| s <= left_in_batch).collect();
        let s = *fit.choose(rng).expect("smallest size must divide k");
        out.push(s);
        left -= s;
        left_in_batch -= s;
        if left_in_batch == 0 {
            left_in_batch = k;
        }
    }
    out
}

/// Appends packets for a burst streaming at line rate from byte-time
/// `w·start_slot`.
fn push_burst(
    out: &mut Vec<Packet>,
    next_id: &mut u64,
    input: usize,
    output: usize,
    start_slot: u64,
    sizes: &[u64],
    w: u64,
) {
    let mut off = 0;
    for &s in sizes {
        off += s;
        out.push(Packet {
            id: *next_id,
            input,
            output,
            size: s,
            arrival_slot: start_slot + off.div_ceil(w) - 1,
        });
        *next_id += 1;
    }
}

fn sort_by_arrival(mut v: Vec<Packet>) -> Vec<Packet> {
    v.sort_by_key(|p| (p.arrival_slot, p.id));
    v
}

/// Frame-only traffic: time is cut into rounds of K/w slots; each round draws
/// a random permutation and input `i` sends one K-byte burst to `π(i)` with
/// probability `load`. Every output receives at most one burst per round, so
/// the expected load per input and per output is `load`. Packet sizes come
/// from `sizes` and never straddle a batch.
pub fn frame_only_workload(
    cfg: &SwitchConfig,
    load: f64,
    slots: u64,
    sizes: &[u64],
    seed: u64,
) -> Vec<Packet> {
    let n = cfg.n_ports as usize;
    let w = cfg.sram_width_bits / 8;
    let k = cfg.batch_bytes();
    let big_k = cfg.frame_bytes();
    let round = big_k / w;
    let mut rng = seed::rng_for(seed, "frame-only", 0);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    let mut id = 0;
    let mut r = 0;
    while (r + 1) * round <= slots {
        perm.shuffle(&mut rng);
        for i in 0..n {
            if rng.random_bool(load.clamp(0.0, 1.0)) {
                let s = batch_aligned_sizes(&mut rng, big_k, k, sizes);
                push_burst(&mut out, &mut id, i, perm[i], r * round, &s, w);
            }
        }
        r += 1;
    }
    sort_by_arrival(out)
}

/// Every input sends one-slot packets to output 0, each slot with probability
/// `over / N`, so output 0 is offered `over` times its capacity.
pub fn overloaded_output_workload(
    cfg: &SwitchConfig,
    over: f64,
    slots: u64,
    seed: u64,
) -> Vec<Packet> {
    let n = cfg.n_ports as usize;
    let w = cfg.sram_width_bits / 8;
    let mut rng = seed::rng_for(seed, "overload", 0);
    let mut out = Vec::new();
    let mut id = 0;
    // Each input offers over/n of output 0's capacity in 64-byte packets.
    let per_input = over / n as f64;
    for t in 0..slots {
        for i in 0..n {
            if rng.random_bool(per_input.clamp(0.0, 1.0)) {
                out.push(Packet { id, input: i, output: 0, size: w, arrival_slot: t });
                id += 1;
            }
        }
    }
    sort_by_arrival(out)
}

/// A single packet of `size` bytes from input `input` to output `output`.
pub fn lone_packet(input: usize, output: usize, size: u64, slot: u64) -> Vec<Packet> {
    vec![Packet { id: 0, input, output, size, arrival_slot: slot }]
}

/// Sub-frame traffic: each input emits packets of random size (from `sizes`)
/// to uniformly random outputs as a Bernoulli process of rate `load`,
/// measured in bytes per line capacity.
pub fn mixed_workload(
    cfg: &SwitchConfig,
    load: f64,
    slots: u64,
    sizes: &[u64],
    seed: u64,
) -> Vec<Packet> {
    let n = cfg.n_ports as usize;
    let w = cfg.sram_width_bits / 8;
    let mut rng = seed::rng_for(seed, "mixed", 0);
    let mean = sizes.iter().sum::<u64>() as f64 / sizes.len() as f64;
    // Chance that an idle slot starts a packet; offered bytes per slot ≈ load·w
    // at light load, somewhat less near saturation.
    let p_start = (load * w as f64 / mean).clamp(0.0, 1.0);
    let mut out = Vec::new();
    let mut id = 0;
    for i in 0..n {
        let mut e = 0u64;
        let mut t = 0u64;
        while t < slots {
            if rng.random_bool(p_start) {
                let size = *sizes.choose(&mut rng).unwrap();
                let end = e.max(w * t) + size;
                let a = end.div_ceil(w) - 1;
                if a >= slots {
                    break;
                }
                out.push(Packet { id, input: i, output: rng.random_range(0..n), size, arrival_slot: a });
                id += 1;
                e = end;
                t = a + 1;
            } else {
                t += 1;
            }
        }
    }
    let mut out = sort_by_arrival(out);
    // Renumber so ids follow arrival order.
    for (i, p) in out.iter_mut().enumerate() {
        p.id = i as u64;
    }
    out
}

/// One [`mixed_workload`] pattern of `period` slots repeated until `slots`.
/// The last `ceil(max size / w)` slots of each period stay idle, so every
/// repetition is placed on the lines exactly like the first and the switch
/// settles into a periodic regime.
pub fn periodic_mixed_workload(
    cfg: &SwitchConfig,
    load: f64,
    slots: u64,
    period: u64,
    sizes: &[u64],
    seed: u64,
) -> Vec<Packet> {
    let w = cfg.sram_width_bits / 8;
    let gap = sizes.iter().copied().max().unwrap_or(0).div_ceil(w) + 1;
    let pattern = mixed_workload(cfg, load, period.saturating_sub(gap), sizes, seed);
    let mut out = Vec::new();
    let mut r = 0;
    while r * period < slots {
        for p in &pattern {
            let a = p.arrival_slot + r * period;
            if a < slots {
                out.push(Packet { id: out.len() as u64, arrival_slot: a, ..*p });
            }
        }
        r += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_model_accepts_back_to_back() {
        let p = vec![
            Packet { id: 0, input: 0, output: 1, size: 128, arrival_slot: 1 },
            Packet { id: 1, input: 0, output: 1, size: 64, arrival_slot: 2 },
        ];
        let pl = place(&p, 2, 64, (64, 9216)).unwrap();
        assert_eq!(pl[0].end, 128);
        assert_eq!(pl[1].end, 192);
        assert_eq!(pl[1].stream_offset, 128);
    }

    #[test]
    fn line_model_rejects_overrun() {
        let p = vec![
            Packet { id: 0, input: 0, output: 0, size: 128, arrival_slot: 1 },
            Packet { id: 1, input: 0, output: 1, size: 128, arrival_slot: 1 },
        ];
        assert_eq!(
            place(&p, 2, 64, (64, 9216)),
            Err(Error::RateViolation { id: 1, input: 0 })
        );
        let early = vec![Packet { id: 0, input: 0, output: 0, size: 128, arrival_slot: 0 }];
        assert!(matches!(place(&early, 1, 64, (64, 9216)), Err(Error::RateViolation { .. })));
    }

    #[test]
    fn frame_only_is_line_rate_feasible() {
        let cfg = SwitchConfig::desk();
        let wl = frame_only_workload(&cfg, 1.0, 2000, &[64, 128, 256], 3);
        assert!(place(&wl, 4, 64, (64, 9216)).is_ok());
        let bytes: u64 = wl.iter().map(|p| p.size).sum();
        assert_eq!(bytes, 4 * 4096 * (2000 / 64));
    }

    #[test]
    fn mixed_is_line_rate_feasible() {
        let cfg = SwitchConfig::desk();
        let wl = mixed_workload(&cfg, 0.9, 5000, &[64, 200, 1500], 3);
        assert!(place(&wl, 4, 64, (64, 9216)).is_ok());
    }
}
