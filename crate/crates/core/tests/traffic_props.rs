use petarouter::traffic::{
    build_synthetic_tm, expand_tm, gen_dc_workload, resize_tm, tm_from_flows, DcWorkloadParams,
    FlowRecord, HashName, LbScheme, SyntheticParams, ZipfOutputs, ADMISSIBLE_EPS,
};
use petarouter::{SwitchConfig, TrafficMatrix};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_tm() -> impl Strategy<Value = TrafficMatrix> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.0, c), r)
            .prop_map(|rows| TrafficMatrix::from_rows(&rows).unwrap())
    })
}

fn admissible(tm: &TrafficMatrix, cap: f64) -> bool {
    tm.row_sums().iter().all(|&r| r <= 1.0 + ADMISSIBLE_EPS)
        && tm.col_sums().iter().all(|&c| c <= cap + ADMISSIBLE_EPS)
        && tm.as_slice().iter().all(|&v| v >= 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn synthetic_is_admissible_and_seeded(seed in any::<u64>(), rho in 0.1f64..=1.0, s in 0.0f64..2.0) {
        let p = SyntheticParams { rho, zipf_s: s, wavelength_gbps: 4.0, ..SyntheticParams::default() };
        let a = build_synthetic_tm(&p, 64, 4, 16.0, seed);
        prop_assert!(admissible(&a, 16.0));
        prop_assert!(a.row_sums().iter().all(|&r| r <= rho + ADMISSIBLE_EPS));
        let limits = p.col_limits(4, 16.0);
        for (c, l) in a.col_sums().iter().zip(limits) {
            prop_assert!(*c <= l + ADMISSIBLE_EPS);
        }
        prop_assert_eq!(a, build_synthetic_tm(&p, 64, 4, 16.0, seed));
    }

    #[test]
    fn expansion_conserves_load(tm in small_tm(), alpha in 0.5f64..=1.0, rs in 0u32..4, cs in 0u32..4) {
        let out = expand_tm(&tm, alpha, tm.rows() << rs, tm.cols() << cs).unwrap();
        prop_assert_eq!(out.rows(), tm.rows() << rs);
        prop_assert_eq!(out.cols(), tm.cols() << cs);
        let (a, b) = (tm.total(), out.total());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-300));
    }

    #[test]
    fn resize_is_admissible(tm in small_tm(), alpha in 0.5f64..=1.0) {
        let out = resize_tm(&tm, alpha, 64, 8, 16.0).unwrap();
        prop_assert!(admissible(&out, 16.0));
        if tm.total() > 0.0 {
            prop_assert!((out.max_utilization(16.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flow_order_does_not_matter(
        flows in prop::collection::vec((0u8..20, 0u8..20, 1.0f64..1e4), 1..60),
        shuffle_seed in any::<u64>(),
    ) {
        let recs: Vec<FlowRecord> = flows
            .iter()
            .map(|(s, d, r)| FlowRecord { src_key: format!("10.0.0.{s}"), dst_key: format!("10.1.0.{d}"), rate_mbps: *r })
            .collect();
        let mut shuffled = recs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        for h in [HashName::Md5, HashName::Sha256_128] {
            let a = tm_from_flows(&recs, 16, 4, 4.0, h).unwrap();
            let b = tm_from_flows(&shuffled, 16, 4, 4.0, h).unwrap();
            prop_assert_eq!(a.as_slice(), b.as_slice());
            prop_assert!(admissible(&a, 4.0));
        }
    }
}

#[test]
fn alpha_outside_range_is_rejected() {
    let tm = TrafficMatrix::from_rows(&[vec![0.5]]).unwrap();
    assert!(expand_tm(&tm, 0.4, 4, 4).is_err());
    assert!(expand_tm(&tm, 1.01, 4, 4).is_err());
}

#[test]
fn md5_known_digest() {
    // RFC 1321 test vector for "abc".
    assert_eq!(HashName::Md5.hash128(b"abc"), 0x900150983cd24fb0d6963f7d28e17f72);
}

#[test]
fn zipf_probabilities() {
    let z = ZipfOutputs::new(4, 1.0);
    let h = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
    for k in 0..4 {
        assert!((z.probability(k) - 1.0 / ((k + 1) as f64 * h)).abs() < 1e-12);
    }
}

fn dc_cfg() -> SwitchConfig {
    SwitchConfig {
        n_ports: 8,
        fibers_per_port: 8,
        wavelengths_per_fiber: 8,
        wavelength_gbps: 0.1,
        switches: 4,
        ..SwitchConfig::desk()
    }
}

#[test]
fn dc_workloads_are_admissible_and_seeded() {
    let cfg = dc_cfg();
    for lb in LbScheme::ALL {
        let p = DcWorkloadParams { n_dcs: 4, lb_scheme: lb, seed: 3, ..Default::default() };
        let a = gen_dc_workload(&p, &cfg).unwrap();
        assert_eq!(a.len(), p.n_time_samples);
        for tm in &a {
            assert_eq!((tm.rows(), tm.cols()), (cfg.tm_rows(), 8));
            assert!(admissible(tm, cfg.tm_col_capacity()));
            assert!(tm.row_sums().iter().all(|&r| r <= p.max_wavelength_load + ADMISSIBLE_EPS));
        }
        assert_eq!(a, gen_dc_workload(&p, &cfg).unwrap());
    }
}

#[test]
fn too_many_dcs_is_an_error() {
    let p = DcWorkloadParams { n_dcs: 9, ..Default::default() };
    assert!(gen_dc_workload(&p, &dc_cfg()).is_err());
}
