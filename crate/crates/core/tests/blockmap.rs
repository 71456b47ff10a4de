use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sbc_core::blockmap::{log_range, sweep_and_fit, BlockMap, BlockMapConfig};
use sbc_core::constants::MassParams;
use sbc_core::integrator::IntegratorConfig;
use sbc_core::normal_form::{normal_form_report, reference_r61, reference_r62, reference_rh};

fn default_map() -> &'static BlockMap {
    static BM: OnceLock<BlockMap> = OnceLock::new();
    BM.get_or_init(|| BlockMap::new(BlockMapConfig::default()).unwrap())
}

#[test]
fn halving_the_offset_scales_the_jump() {
    let bm = default_map();
    for s in [0.03, 0.01, 0.003] {
        let a = bm.row(s).unwrap();
        let b = bm.row(s / 2.0).unwrap();
        let r = b.dh1 / a.dh1;
        let expect = 2f64.powf(-8.0 / 3.0);
        assert!((r / expect - 1.0).abs() < 0.05, "s = {s}: ratio {r}");
    }
}

#[test]
fn section_placement_does_not_matter() {
    let s = log_range(1e-3, 3e-2, 10).unwrap();
    let coef = |delta: f64| {
        let bm = BlockMap::new(BlockMapConfig { delta, ..Default::default() }).unwrap();
        sweep_and_fit(&bm, &s, 4).unwrap().coefficient_83.unwrap()
    };
    let (a, b) = (coef(0.1), coef(0.2));
    assert!((a / b - 1.0).abs() < 0.02, "{a} {b}");
}

#[test]
fn serial_runs_are_bit_identical() {
    let s = log_range(2e-3, 3e-2, 8).unwrap();
    let a = sweep_and_fit(default_map(), &s, 1).unwrap();
    let b = sweep_and_fit(default_map(), &s, 1).unwrap();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let c = sweep_and_fit(default_map(), &s, 4).unwrap();
    assert_eq!(a.rows, c.rows);
}

#[test]
fn failures_are_reported_per_row() {
    let mut s = log_range(1e-3, 3e-2, 9).unwrap();
    s.push(1e-6);
    let r = sweep_and_fit(default_map(), &s, 2).unwrap();
    assert_eq!(r.rows.len(), 9);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.failures[0].class, "too_close");
    assert!(r.fit.is_some());
    assert!(sweep_and_fit(default_map(), &[0.01, -0.01], 1).is_err());
}

#[test]
fn uncoupled_sweep_refuses_to_fit() {
    let bm = BlockMap::new(BlockMapConfig { uncoupled: true, ..Default::default() }).unwrap();
    let r = sweep_and_fit(&bm, &log_range(1e-3, 3e-2, 10).unwrap(), 2).unwrap();
    assert!(r.rows.iter().all(|x| x.raw_dh1 == 0.0 && x.raw_dh2 == 0.0 && x.raw_dy == 0.0));
    assert!(r.fit.is_none());
    assert!(r.fit_error.unwrap().contains("noise floor"));
}

#[test]
fn exit_lies_on_the_section() {
    let bm = default_map();
    for s in [0.02, 0.002, -0.005] {
        let r = bm.row(s).unwrap();
        let level = 0.5 * (r.state_out[0] + r.state_out[1]);
        assert!((level - 0.1).abs() <= 1e-12 * 0.1, "{level}");
        assert!(r.time_rescaled > 0.0 && r.time_physical > 0.0);
    }
}

#[test]
fn halving_tolerance_reduces_energy_drift() {
    let drift = |rel: f64| {
        let cfg = BlockMapConfig { integrator: IntegratorConfig::with_tolerances(rel, rel * 1e-2), chart_degree: 11, ..Default::default() };
        BlockMap::new(cfg).unwrap().row(0.1).unwrap().energy_drift
    };
    let (coarse, fine) = (drift(1e-6), drift(5e-7));
    assert!(coarse >= 1.5 * fine, "{coarse:e} {fine:e}");
}

#[test]
fn resonant_polynomials_do_not_depend_on_masses() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..5 {
        let m: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.5..4.0));
        let m = MassParams::new(m[0], m[1], m[2], m[3]).unwrap();
        let rep = normal_form_report(&m, 9).unwrap();
        assert!(rep.certificate_ok());
        assert_eq!(rep.r61.unwrap(), reference_r61().render());
        assert_eq!(rep.r62.unwrap(), reference_r62().render());
        assert_eq!(rep.rh.unwrap(), reference_rh().render());
        assert_eq!(rep.lowest_h_resonance_degree, Some(9));
    }
}
