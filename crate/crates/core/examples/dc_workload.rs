//! Cross-DC pipeline-parallel traffic on top of WAN background, under ECMP,
//! round-robin and adaptive load balancing.

use petarouter::sps::{evaluate, EvalMode};
use petarouter::traffic::{gen_dc_workload_detailed, DcWorkloadParams, LbScheme};
use petarouter::SwitchConfig;

fn main() -> petarouter::Result<()> {
    let cfg = SwitchConfig {
        n_ports: 8,
        fibers_per_port: 8,
        wavelengths_per_fiber: 8,
        wavelength_gbps: 0.1,
        switches: 4,
        ..SwitchConfig::desk()
    };
    for lb in LbScheme::ALL {
        let mut total = 0.0;
        let seeds = 10;
        for seed in 0..seeds {
            let p = DcWorkloadParams { n_dcs: 4, lb_scheme: lb, seed, ..Default::default() };
            let samples = gen_dc_workload_detailed(&p, &cfg)?;
            if seed == 0 {
                let comm = samples.iter().filter(|s| s.communicating).count();
                println!("{}: {} samples, {comm} with DC traffic", lb.as_str(), samples.len());
            }
            let tms: Vec<_> = samples.into_iter().map(|s| s.tm).collect();
            total += evaluate(&tms, &cfg, 10, seed, EvalMode::FiberSplit)?.network_loss_rate.mean;
        }
        println!("  mean loss over {seeds} seeds: {:.4}%", 100.0 * total / seeds as f64);
    }
    Ok(())
}
