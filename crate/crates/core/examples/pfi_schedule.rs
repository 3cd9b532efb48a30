//! Command schedule of one frame write on the small config, and the timing
//! check applied to it.

use petarouter::config::derive_and_validate;
use petarouter::hbm::{check_timing, pfi_write_schedule, FrameTag};
use petarouter::{HbmTiming, SwitchConfig};

fn main() -> petarouter::Result<()> {
    let (cfg, t) = (SwitchConfig::desk(), HbmTiming::desk());
    let d = derive_and_validate(&cfg, &t)?;
    println!("t_S = {} ns, t_FAW = {} ns, {} bank groups of {} banks", d.t_segment_ns, t.t_faw_ns, d.bank_groups, cfg.gamma);
    for seq in 0..2 {
        let tag = FrameTag::new(3, seq, d.bank_groups);
        let cmds = pfi_write_schedule(tag, &cfg, &t, &d, 100.0)?;
        println!("frame {seq} of output 3 -> group {}", tag.group);
        for c in cmds.iter().filter(|c| c.channel.is_none() || c.channel == Some(0)) {
            let ch = c.channel.map_or("*".to_string(), |x| x.to_string());
            println!("  {:>9.3} ns {:3} ch {ch:>2} bank {}", c.time_ns, c.kind.as_str(), c.bank);
        }
        println!("  violations: {}", check_timing(&cmds, &cfg, &t, &d).violations());
    }
    Ok(())
}
