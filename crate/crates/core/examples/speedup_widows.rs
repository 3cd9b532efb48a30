//! Sub-frame traffic. Without speedup or padding a lone packet never leaves;
//! a marked slot every n slots carries partial frames out.

use petarouter::hbm::{lone_packet, periodic_mixed_workload, SimOptions};
use petarouter::oracle::compare_mimic;
use petarouter::{HbmTiming, SwitchConfig};

fn main() -> petarouter::Result<()> {
    let (cfg, t) = (SwitchConfig::desk(), HbmTiming::desk());
    let lone = lone_packet(0, 1, 64, 10);
    for n in [None, Some(1), Some(2), Some(4)] {
        let opts = SimOptions { slots: 20_000, speedup_n: n, ..Default::default() };
        let (m, _, tr) = compare_mimic(&lone, &cfg, &t, opts)?;
        println!("lone packet, speedup {n:?}: departs {:?}, lag {} -> {}", tr.departures[0], m.lag_at_half, m.lag_at_end);
    }
    let slots = 40_000;
    let wl = periodic_mixed_workload(&cfg, 0.5, slots, 4096, &[64, 200, 576, 1500], 3);
    for n in [1, 2, 4] {
        let opts = SimOptions { slots, speedup_n: Some(n), record_commands: false, occupancy_stride: 0, ..Default::default() };
        let (m, _, tr) = compare_mimic(&wl, &cfg, &t, opts)?;
        println!(
            "mixed sizes, n = {n}: lag {} -> {}, {} marked frames, {} undelivered",
            m.lag_at_half, m.lag_at_end, tr.counters.marked_frames, m.undelivered
        );
    }
    Ok(())
}
