//! HBM switch against the ideal output-queued switch on frame-only traffic:
//! lag and throughput gap at several loads.

use petarouter::hbm::{frame_only_workload, SimOptions};
use petarouter::oracle::{compare_mimic, throughput_report};
use petarouter::{HbmTiming, SwitchConfig};

fn main() -> petarouter::Result<()> {
    let (cfg, t) = (SwitchConfig::desk(), HbmTiming::desk());
    let slots = 50_000;
    for load in [0.5, 0.9, 0.99, 1.0] {
        let wl = frame_only_workload(&cfg, load, slots, &[64, 128, 256], 7);
        let opts = SimOptions { slots, record_commands: false, occupancy_stride: 0, ..Default::default() };
        let (m, oracle, hbm) = compare_mimic(&wl, &cfg, &t, opts)?;
        let th = throughput_report(&wl, &oracle, &hbm, 64, 4 * 64 * 4)?;
        println!(
            "load {load}: lag {} -> {} slots ({}), max gap {:.1} cells, final-half slope {:.2e}",
            m.lag_at_half,
            m.lag_at_end,
            if m.bounded { "bounded" } else { "growing" },
            th.max_gap,
            th.final_half_slope
        );
    }
    Ok(())
}
