//! Two ports, two fibers, two switches: fixed fiber wiring loses traffic that a
//! different wiring would carry.

use petarouter::sps::{evaluate, split_tm, fluid_loss, EvalMode, FiberAssignment};
use petarouter::{SwitchConfig, TrafficMatrix};

fn main() -> petarouter::Result<()> {
    let cfg = SwitchConfig {
        n_ports: 2,
        fibers_per_port: 2,
        wavelengths_per_fiber: 1,
        switches: 2,
        ..SwitchConfig::reference()
    };
    // Rows: (port 0, fiber 0), (port 0, fiber 1), (port 1, fiber 0), (port 1, fiber 1).
    let tm = TrafficMatrix::from_rows(&[
        vec![0.6, 0.3],
        vec![0.3, 0.6],
        vec![0.5, 0.4],
        vec![0.3, 0.15],
    ])?;
    let first = FiberAssignment::in_order(&cfg);
    for (s, sub) in split_tm(&tm, &first, &cfg)?.iter().enumerate() {
        let l = fluid_loss(sub, cfg.switch_col_capacity());
        println!("switch {s}: columns {:?}, drops {:?}, loss {:.4}%", sub.col_sums(), l.drops, 100.0 * l.loss_rate);
    }
    let fixed = evaluate(&[tm.clone()], &cfg, 1, 0, EvalMode::FirstFiber)?;
    let random = evaluate(&[tm], &cfg, 1000, 1, EvalMode::FiberSplit)?;
    println!("first-fiber router loss {:.4}%", 100.0 * fixed.network_loss_rate.mean);
    println!("random splits, 1000 trials: mean {:.4}%, max {:.4}%", 100.0 * random.network_loss_rate.mean, 100.0 * random.network_loss_rate.max);
    Ok(())
}
