//! Derived geometry, SRAM bounds and power/area figures of the reference design.

use petarouter::config::{derive_and_validate, design_analysis, sram_bound_bytes, AnalysisParams, MB};
use petarouter::{HbmTiming, SwitchConfig};

fn main() -> petarouter::Result<()> {
    let cfg = SwitchConfig::reference();
    let d = derive_and_validate(&cfg, &HbmTiming::reference())?;
    println!("alpha = {}, T = {} channels, L/gamma = {} bank groups", d.alpha, d.channels, d.bank_groups);
    println!("k = {} B, K = {} B ({} batches per frame)", d.batch_bytes, d.frame_bytes, d.batches_per_frame);
    println!("port rate {} Gb/s, I/O per direction {} Tb/s", d.port_rate_gbps, d.io_per_direction_gbps / 1000.0);
    println!("interleaving cycle {:.4} ns, slot {:.4} ns", d.cycle_ns, d.slot_ns);

    let (bytes, b) = sram_bound_bytes(&cfg);
    println!("SRAM bound {bytes} B = {:.1} MB", bytes as f64 / MB);
    for (name, bits) in [("inputs", b.inputs_bits), ("tail", b.tail_bits), ("head", b.head_bits), ("outputs", b.outputs_bits)] {
        println!("  {name:8} {:>10} B", bits / 8);
    }

    let a = design_analysis(&cfg, &AnalysisParams::default());
    println!("buffering {:.1} ms ({} TB)", a.buffer_ms, a.buffer_tb);
    println!(
        "power per switch {:.1} W = {:.1} processing + {:.0} HBM + {:.1} OEO; total {:.2} kW",
        a.power_w_per_switch, a.processing_w, a.hbm_w, a.oeo_w, a.power_kw_total
    );
    println!("area {} mm2 per switch, {} mm2 total", a.area_mm2_per_switch, a.area_mm2_total);
    Ok(())
}
