use petarouter::config::{
    derive_and_validate, design_analysis, sram_bound_bytes, sram_bound_closed_form_bits, sram_bounds,
    AnalysisParams,
};
use petarouter::{Config, HbmTiming, SwitchConfig};
use proptest::prelude::*;

fn any_geometry() -> impl Strategy<Value = SwitchConfig> {
    (1u64..=6, 0u32..=4, 1u64..=4, 0u32..=3, 0u32..=3, 6u32..=11, 8u32..=12).prop_map(
        |(n_exp, h_exp, b, g_exp, groups_exp, seg_exp, width_exp)| {
            let n = 1 << n_exp.min(5);
            let gamma = 1 << g_exp;
            SwitchConfig {
                n_ports: n,
                fibers_per_port: 64,
                switches: 1 << h_exp,
                stacks_per_switch: b,
                gamma,
                banks_per_channel: gamma << groups_exp,
                segment_bytes: 1 << seg_exp,
                sram_width_bits: 1 << width_exp,
                ..SwitchConfig::reference()
            }
        },
    )
    .prop_filter("valid config", |c| derive_and_validate(c, &HbmTiming::reference()).is_ok())
}

proptest! {
    #[test]
    fn closed_form_matches_component_sum(cfg in any_geometry()) {
        let b = sram_bounds(&cfg);
        prop_assert_eq!(b.total_bits(), sram_bound_closed_form_bits(&cfg));
    }

    #[test]
    fn derive_is_pure(cfg in any_geometry()) {
        let t = HbmTiming::reference();
        let a = derive_and_validate(&cfg, &t);
        let b = derive_and_validate(&cfg, &t);
        prop_assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}

#[test]
fn reference_batches_per_frame() {
    let d = derive_and_validate(&SwitchConfig::reference(), &HbmTiming::reference()).unwrap();
    assert_eq!(d.batches_per_frame, 128);
    assert_eq!(d.frame_bytes / d.batch_bytes, 128);
}

#[test]
fn reference_components_in_bits() {
    let b = sram_bounds(&SwitchConfig::reference());
    let (k, big_k, n) = (4096 * 8, 512 * 1024 * 8, 16);
    assert_eq!(b.inputs_bits, n * (n * k + k - n));
    assert_eq!(b.tail_bits, n * big_k + big_k - n * k);
    assert_eq!(b.head_bits, (n + 1) * big_k / 2);
    assert_eq!(b.outputs_bits, 2 * n * k);
    assert_eq!(sram_bound_bytes(&SwitchConfig::reference()).0, 14_548_960);
}

#[test]
fn reference_io_and_port_rate() {
    let d = derive_and_validate(&SwitchConfig::reference(), &HbmTiming::reference()).unwrap();
    assert_eq!(d.io_per_direction_gbps, 655_360.0);
    assert_eq!(d.io_per_switch_gbps, 81_920.0);
    assert_eq!(d.port_rate_gbps, 2560.0);
    assert_eq!(d.line_slot_ns, 0.8);
}

#[test]
fn analysis_anchors_come_from_config() {
    let cfg = SwitchConfig::reference();
    let base = design_analysis(&cfg, &AnalysisParams::default());
    let p = AnalysisParams { stack_power_w: 150.0, ..AnalysisParams::default() };
    let doubled = design_analysis(&cfg, &p);
    assert_eq!(doubled.hbm_w, 2.0 * base.hbm_w);
    assert_eq!(base.hbm_w, 300.0);
    assert_eq!(base.oeo_w, 94.208);
    assert_eq!(base.area_mm2_per_switch, 1284.0);
}

#[test]
fn rejects_broken_invariants() {
    let t = HbmTiming::reference();
    for bad in [
        SwitchConfig { fibers_per_port: 63, ..SwitchConfig::reference() },
        SwitchConfig { banks_per_channel: 62, ..SwitchConfig::reference() },
        SwitchConfig { n_ports: 0, ..SwitchConfig::reference() },
    ] {
        assert!(derive_and_validate(&bad, &t).is_err(), "{bad:?}");
    }
}

#[test]
fn config_file_round_trip() {
    let c = Config::reference();
    let text = toml::to_string(&c).unwrap();
    assert_eq!(Config::from_toml(&text).unwrap(), c);
    assert!(Config::from_toml("[switch]\nn_portz = 3\n").is_err());
    let partial = Config::from_toml("[switch]\nn_ports = 8\n").unwrap();
    assert_eq!(partial.switch.n_ports, 8);
    assert_eq!(partial.switch.fibers_per_port, 64);
}
