//! Slot-level run of one HBM switch on frame-only traffic: occupancy per SRAM
//! component, frame counters and timing legality.

use petarouter::hbm::{check_timing, frame_only_workload, HbmSwitch, SimOptions, COMPONENTS};
use petarouter::{HbmTiming, SwitchConfig};

fn main() -> petarouter::Result<()> {
    let (cfg, t) = (SwitchConfig::desk(), HbmTiming::desk());
    let slots = 20_000;
    let wl = frame_only_workload(&cfg, 0.9, slots, &[64, 128, 256], 1);
    let sw = HbmSwitch::new(&cfg, &t, SimOptions { slots, occupancy_stride: 1000, ..Default::default() })?;
    let tr = sw.run(&wl)?;
    println!("{} packets, {} delivered, slot {:.4} ns", wl.len(), tr.delivered(), tr.slot_ns);
    println!("{:?}", tr.counters);
    let bounds = [tr.bounds.inputs_bits, tr.bounds.tail_bits, tr.bounds.head_bits, tr.bounds.outputs_bits];
    for (i, name) in COMPONENTS.iter().enumerate() {
        println!(
            "{name:8} max {:>6} B, bound {:>6} B, over bound in {} slots",
            tr.max_occupancy.as_array()[i],
            bounds[i] / 8,
            tr.bound_violations.counts[i]
        );
    }
    let series: Vec<u64> = tr.occupancy.iter().map(|o| o.total()).collect();
    println!("total occupancy every 1000 slots: {series:?}");
    let rep = check_timing(&tr.commands, &cfg, &t, sw.derived());
    println!("{} HBM commands, {} timing violations", rep.commands, rep.violations());
    Ok(())
}
