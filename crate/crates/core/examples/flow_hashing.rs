//! Builds a matrix from flow records by hashing endpoint keys, as done for
//! packet traces, and compares the two hash functions.

use petarouter::sps::{evaluate, EvalMode};
use petarouter::traffic::{tm_from_flows, FlowRecord, HashName};
use petarouter::SwitchConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> petarouter::Result<()> {
    let cfg = SwitchConfig { n_ports: 8, fibers_per_port: 8, wavelengths_per_fiber: 4, switches: 4, ..SwitchConfig::reference() };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let flows: Vec<FlowRecord> = (0..20_000)
        .map(|_| FlowRecord {
            src_key: format!("10.{}.{}.{}", rng.random_range(0..4), rng.random_range(0..256), rng.random_range(0..256)),
            dst_key: format!("172.16.{}.{}", rng.random_range(0..64), rng.random_range(0..256)),
            rate_mbps: 10f64.powf(rng.random_range(-1.0..3.0)),
        })
        .collect();
    for h in [HashName::Md5, HashName::Sha256_128] {
        let tm = tm_from_flows(&flows, cfg.tm_rows(), cfg.n_ports as usize, cfg.tm_col_capacity(), h)?;
        let r = evaluate(&[tm.clone()], &cfg, 50, 1, EvalMode::FiberSplit)?;
        let nz = tm.as_slice().iter().filter(|&&v| v > 0.0).count();
        println!("{}: {nz} non-zero cells, loss {:.4}% (max {:.4}%)", h.as_str(), 100.0 * r.network_loss_rate.mean, 100.0 * r.network_loss_rate.max);
    }
    Ok(())
}
