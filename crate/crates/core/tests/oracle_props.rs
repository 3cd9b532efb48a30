use std::collections::VecDeque;

use petarouter::hbm::{frame_only_workload, overloaded_output_workload, HbmSwitch, Packet, SimOptions};
use petarouter::oracle::{compare_mimic, oq_departures, run_oracle, throughput_check};
use petarouter::{HbmTiming, SwitchConfig};
use proptest::prelude::*;

/// Byte-by-byte reference: each slot an output sends up to `w` bytes from a
/// FIFO of packets that arrived in earlier slots.
fn slot_by_slot(packets: &[Packet], n: usize, w: u64) -> Vec<u64> {
    let mut order: Vec<usize> = (0..packets.len()).collect();
    order.sort_by_key(|&i| (packets[i].arrival_slot, packets[i].id));
    let mut queues: Vec<VecDeque<(usize, u64)>> = vec![VecDeque::new(); n];
    let mut dep = vec![u64::MAX; packets.len()];
    let mut next = 0;
    let mut t = 0;
    while dep.iter().any(|&d| d == u64::MAX) {
        while next < order.len() && packets[order[next]].arrival_slot < t {
            let i = order[next];
            queues[packets[i].output].push_back((i, packets[i].size));
            next += 1;
        }
        for q in &mut queues {
            let mut budget = w;
            while budget > 0 {
                let Some(front) = q.front_mut() else { break };
                let take = front.1.min(budget);
                front.1 -= take;
                budget -= take;
                if front.1 == 0 {
                    dep[front.0] = t;
                    q.pop_front();
                }
            }
        }
        t += 1;
    }
    dep
}

fn packets() -> impl Strategy<Value = Vec<Packet>> {
    prop::collection::vec((0usize..3, 0usize..3, 64u64..=300, 0u64..40), 1..=6).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (input, output, size, a))| Packet { id: i as u64, input, output, size, arrival_slot: a })
            .collect()
    })
}

proptest! {
    #[test]
    fn oracle_matches_slot_by_slot(p in packets()) {
        prop_assert_eq!(oq_departures(&p, 3, 64), slot_by_slot(&p, 3, 64));
    }

    #[test]
    fn oracle_is_work_conserving(p in packets()) {
        let d = oq_departures(&p, 3, 64);
        for (i, q) in p.iter().enumerate() {
            // Never earlier than an idle line allows.
            prop_assert!(d[i] >= q.arrival_slot + q.size.div_ceil(64));
        }
    }
}

#[test]
fn oracle_is_deterministic() {
    let c = SwitchConfig::desk();
    let wl = frame_only_workload(&c, 0.8, 5000, &[64, 256], 4);
    assert_eq!(run_oracle(&wl, &c).unwrap(), run_oracle(&wl, &c).unwrap());
}

/// Largest oracle delay of packets arriving in `[from, from + 1000)`.
fn max_queue_delay(wl: &[Packet], c: &SwitchConfig, from: u64) -> u64 {
    let d = run_oracle(wl, c).unwrap();
    wl.iter().zip(&d.departures).filter(|(p, _)| (from..from + 1000).contains(&p.arrival_slot)).map(|(p, &x)| x - p.arrival_slot).max().unwrap()
}

#[test]
fn oracle_queues_bounded_iff_admissible() {
    let c = SwitchConfig::desk();
    let ok = frame_only_workload(&c, 1.0, 20_000, &[64, 128, 256], 1);
    let early = max_queue_delay(&ok, &c, 5_000);
    let late = max_queue_delay(&ok, &c, 15_000);
    assert!(late < 200 && early < 200, "{early} {late}");
    let over = overloaded_output_workload(&c, 1.5, 20_000, 1);
    let a = max_queue_delay(&over, &c, 5_000);
    let b = max_queue_delay(&over, &c, 15_000);
    assert!(b > a + 1000, "{a} {b}");
}

#[test]
fn hbm_never_far_behind() {
    let (c, t) = (SwitchConfig::desk(), HbmTiming::desk());
    for seed in 0..3 {
        let wl = frame_only_workload(&c, 0.95, 20_000, &[64, 128, 256], seed);
        let opts = SimOptions { slots: 20_000, record_commands: false, occupancy_stride: 0, ..Default::default() };
        let th = throughput_check(&wl, &c, &t, opts.clone()).unwrap();
        // D_HBM(t) >= D_SM(t) - B with B the first-half maximum of the gap.
        let half = th.gap.len() / 2;
        let b = th.gap[..half].iter().copied().fold(0.0, f64::max);
        assert!(th.gap[half..].iter().all(|&g| g <= b), "seed {seed}: {} > {b}", th.max_gap);
        let (m, _, _) = compare_mimic(&wl, &c, &t, opts).unwrap();
        assert!(m.bounded);
        assert!(m.max_delay_diff >= 0);
    }
}

#[test]
fn mismatched_traces_are_rejected() {
    let (c, t) = (SwitchConfig::desk(), HbmTiming::desk());
    let a = frame_only_workload(&c, 0.5, 1000, &[64], 1);
    let b = frame_only_workload(&c, 0.6, 1000, &[64], 2);
    let hbm = HbmSwitch::new(&c, &t, SimOptions { slots: 1000, ..Default::default() }).unwrap().run(&a).unwrap();
    let or = run_oracle(&b, &c).unwrap();
    if a.len() != b.len() {
        assert!(petarouter::oracle::mimic_report(&or, &hbm).is_err());
    }
}
