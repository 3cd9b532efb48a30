use std::collections::HashMap;

use petarouter::hbm::{
    check_timing, frame_only_workload, FrameTag, mixed_workload, pfi_read_schedule, pfi_write_schedule, CommandKind,
    HbmCommand, HbmSwitch, Packet, SimOptions, SimTrace,
};
use petarouter::{HbmTiming, SwitchConfig};
use proptest::prelude::*;

fn desk() -> (SwitchConfig, HbmTiming) {
    (SwitchConfig::desk(), HbmTiming::desk())
}

fn sim(wl: &[Packet], opts: SimOptions) -> (SimTrace, HbmSwitch) {
    let (c, t) = desk();
    let sw = HbmSwitch::new(&c, &t, opts).unwrap();
    (sw.run(wl).unwrap(), sw)
}

/// Regular frames reach the head in sequence order for every output.
fn check_frame_order(tr: &SimTrace) -> Result<(), TestCaseError> {
    let mut seq: HashMap<u32, u64> = HashMap::new();
    for h in &tr.head_arrivals {
        let next = seq.entry(h.output).or_insert(0);
        prop_assert_eq!(h.seq, *next, "output {} frames out of order", h.output);
        *next += 1;
    }
    Ok(())
}

/// Packets of one (input, output) stream leave in arrival order. Only holds
/// without speedup: a marked widow may overtake framed data of its stream.
fn check_fifo(wl: &[Packet], tr: &SimTrace) -> Result<(), TestCaseError> {
    let mut last: HashMap<(usize, usize), u64> = HashMap::new();
    for (p, d) in wl.iter().zip(&tr.departures) {
        let Some(d) = *d else { continue };
        let prev = last.insert((p.input, p.output), d).unwrap_or(0);
        prop_assert!(d >= prev, "packet {} left before an earlier one", p.id);
        prop_assert!(d > p.arrival_slot);
    }
    check_frame_order(tr)
}

fn check_groups(cmds: &[HbmCommand], gamma: u32, groups: u64) -> Result<(), TestCaseError> {
    for c in cmds {
        prop_assert_eq!((c.bank / gamma) as u64, c.frame_seq % groups);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn frame_only_runs_are_legal_and_ordered(seed in any::<u64>(), load in 0.2f64..=1.0) {
        let (c, t) = desk();
        let wl = frame_only_workload(&c, load, 4000, &[64, 128, 256], seed);
        let (tr, sw) = sim(&wl, SimOptions { slots: 4000, ..Default::default() });
        let rep = check_timing(&tr.commands, &c, &t, sw.derived());
        prop_assert_eq!(rep.violations(), 0, "{:?}", rep);
        check_fifo(&wl, &tr)?;
        check_groups(&tr.commands, c.gamma as u32, c.bank_groups())?;
        prop_assert_eq!(tr.occupancy.len() as u64, 4000);
    }

    #[test]
    fn mixed_runs_are_legal_and_ordered(seed in any::<u64>(), n in 1u64..=4, pad in prop::option::of(64u64..512)) {
        let (c, t) = desk();
        let wl = mixed_workload(&c, 0.5, 3000, &[64, 200, 576, 1500], seed);
        let opts = SimOptions { slots: 3000, speedup_n: Some(n), padding_timeout: pad, ..Default::default() };
        let (tr, sw) = sim(&wl, opts);
        prop_assert_eq!(check_timing(&tr.commands, &c, &t, sw.derived()).violations(), 0);
        check_frame_order(&tr)?;
        prop_assert!(wl.iter().zip(&tr.departures).all(|(p, d)| d.is_none_or(|d| d > p.arrival_slot)));
        check_groups(&tr.commands, c.gamma as u32, c.bank_groups())?;
    }

    #[test]
    fn padded_mixed_runs_keep_stream_order(seed in any::<u64>(), pad in 16u64..400, bypass in any::<bool>()) {
        let (c, t) = desk();
        let wl = mixed_workload(&c, 0.6, 3000, &[64, 200, 576, 1500], seed);
        let opts = SimOptions { slots: 3000, padding_timeout: Some(pad), bypass, ..Default::default() };
        let (tr, sw) = sim(&wl, opts);
        prop_assert_eq!(check_timing(&tr.commands, &c, &t, sw.derived()).violations(), 0);
        check_fifo(&wl, &tr)?;
        check_groups(&tr.commands, c.gamma as u32, c.bank_groups())?;
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let (c, _) = desk();
        let wl = mixed_workload(&c, 0.7, 1500, &[64, 1500], seed);
        let opts = SimOptions { slots: 1500, padding_timeout: Some(100), bypass: true, ..Default::default() };
        let (a, _) = sim(&wl, opts.clone());
        let (b, _) = sim(&wl, opts);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn everything_drains_with_padding() {
    let (c, _) = desk();
    let wl = mixed_workload(&c, 0.6, 2000, &[64, 200, 1500], 5);
    let opts = SimOptions { slots: 12_000, padding_timeout: Some(200), ..Default::default() };
    let (tr, _) = sim(&wl, opts);
    assert_eq!(tr.delivered(), wl.len());
    let last = tr.occupancy.last().unwrap();
    assert_eq!(last.total(), 0, "{last:?}");
    assert!(tr.counters.padded_bytes > 0);
}

#[test]
fn lone_packet_stuck_without_padding() {
    let wl = vec![Packet { id: 0, input: 1, output: 2, size: 64, arrival_slot: 3 }];
    let (tr, _) = sim(&wl, SimOptions { slots: 5000, ..Default::default() });
    assert_eq!(tr.departures, vec![None]);
    let (tr, _) = sim(&wl, SimOptions { slots: 5000, padding_timeout: Some(50), bypass: true, ..Default::default() });
    assert!(tr.departures[0].is_some());
    assert_eq!(tr.counters.bypasses, 1);
}

#[test]
fn finite_hbm_drops_frames() {
    let (c, _) = desk();
    let wl = petarouter::hbm::overloaded_output_workload(&c, 2.0, 6000, 1);
    let opts = SimOptions { slots: 6000, hbm_capacity_frames: Some(8), record_commands: false, ..Default::default() };
    let (tr, _) = sim(&wl, opts);
    assert!(tr.counters.dropped_frames > 0);
}

#[test]
fn no_straddle_pads_batches() {
    let (c, _) = desk();
    let wl = mixed_workload(&c, 0.5, 3000, &[200], 2);
    let base = SimOptions { slots: 3000, record_commands: false, ..Default::default() };
    let (a, _) = sim(&wl, base.clone());
    let (b, _) = sim(&wl, SimOptions { allow_straddle: false, ..base });
    assert_eq!(a.counters.padded_batches, 0);
    assert!(b.counters.padded_batches > 0);
}

#[test]
fn invalid_workload_is_rejected() {
    let (c, t) = desk();
    let sw = HbmSwitch::new(&c, &t, SimOptions::default()).unwrap();
    let small = vec![Packet { id: 0, input: 0, output: 0, size: 10, arrival_slot: 0 }];
    assert!(sw.run(&small).is_err());
    let port = vec![Packet { id: 0, input: 4, output: 0, size: 64, arrival_slot: 0 }];
    assert!(sw.run(&port).is_err());
    // 4 KB in one slot on a 64 B/slot line.
    let burst: Vec<Packet> = (0..64).map(|i| Packet { id: i, input: 0, output: 1, size: 64, arrival_slot: 0 }).collect();
    assert!(sw.run(&burst).is_err());
}

#[test]
fn one_frame_schedule_covers_its_segments_once() {
    let (c, t) = desk();
    let d = petarouter::config::derive_and_validate(&c, &t).unwrap();
    for seq in 0..c.bank_groups() * 2 {
        let tag = FrameTag::new(1, seq, c.bank_groups());
        let w = pfi_write_schedule(tag, &c, &t, &d, 0.0).unwrap();
        let r = pfi_read_schedule(tag, &c, &t, &d, 0.0).unwrap();
        for cmds in [&w, &r] {
            let mut segs: Vec<u32> = cmds.iter().filter_map(|x| x.segment).collect();
            segs.sort();
            segs.dedup();
            assert_eq!(segs.len() as u64, c.gamma * c.channels());
            assert_eq!(check_timing(cmds, &c, &t, &d).violations(), 0);
            let acts = cmds.iter().filter(|x| x.kind == CommandKind::Act).count() as u64;
            assert_eq!(acts, c.gamma);
            assert!(cmds.iter().all(|x| (x.bank as u64) / c.gamma == seq % c.bank_groups()));
        }
    }
}
