//! Loss of random fiber splits on synthetic matrices while sweeping the Zipf
//! skew and the per-wavelength load. Small dimensions so it runs in seconds.

use petarouter::sps::{evaluate, EvalMode};
use petarouter::traffic::{build_synthetic_tm, SyntheticParams};
use petarouter::SwitchConfig;

fn main() -> petarouter::Result<()> {
    let cfg = SwitchConfig { fibers_per_port: 16, wavelengths_per_fiber: 4, switches: 4, ..SwitchConfig::reference() };
    println!("{}x{} matrices, H = {}", cfg.tm_rows(), cfg.n_ports, cfg.switches);
    println!("{:>6} {:>6} {:>12} {:>12}", "zipf", "rho", "mean loss %", "max loss %");
    for s in [0.0, 0.5, 1.0, 2.0] {
        for rho in [0.5, 0.8, 1.0] {
            let p = SyntheticParams { rho, zipf_s: s, ..SyntheticParams::default() };
            let tms: Vec<_> = (0..3).map(|i| build_synthetic_tm(&p, cfg.tm_rows(), cfg.n_ports as usize, cfg.tm_col_capacity(), i)).collect();
            let r = evaluate(&tms, &cfg, 20, 11, EvalMode::FiberSplit)?;
            println!("{s:>6} {rho:>6} {:>12.4} {:>12.4}", 100.0 * r.network_loss_rate.mean, 100.0 * r.network_loss_rate.max);
        }
    }
    Ok(())
}
