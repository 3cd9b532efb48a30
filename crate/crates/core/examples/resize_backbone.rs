//! Expands a small router-level matrix (rows are input ports) to wavelength
//! granularity, then evaluates it with and without the alpha split skew.

use petarouter::sps::{evaluate, EvalMode};
use petarouter::traffic::resize_tm;
use petarouter::{SwitchConfig, TrafficMatrix};

fn main() -> petarouter::Result<()> {
    let cfg = SwitchConfig { fibers_per_port: 16, wavelengths_per_fiber: 4, switches: 4, ..SwitchConfig::reference() };
    let router: Vec<Vec<f64>> = (0..12)
        .map(|i| (0..12).map(|j| if i == j { 0.0 } else { 1.0 + ((i * 7 + j * 3) % 5) as f64 }).collect())
        .collect();
    let src = TrafficMatrix::from_rows(&router)?;
    for alpha in [0.5, 0.6, 0.75, 0.9] {
        let tm = resize_tm(&src, alpha, cfg.tm_rows(), cfg.n_ports as usize, cfg.tm_col_capacity())?;
        let r = evaluate(&[tm.clone()], &cfg, 50, 3, EvalMode::FiberSplit)?;
        println!(
            "alpha {alpha}: {}x{} total {:.2}, max utilization {:.3}, loss {:.4}%",
            tm.rows(),
            tm.cols(),
            tm.total(),
            tm.max_utilization(cfg.tm_col_capacity()),
            100.0 * r.network_loss_rate.mean
        );
    }
    Ok(())
}
