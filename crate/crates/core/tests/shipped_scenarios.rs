//! The scenarios shipped in `scenarios/` load, and their dispersion and
//! noise settings are the ones their comments describe.

use std::path::PathBuf;

use qpulse_core::medium::{kk_check, permittivity};
use qpulse_core::nlse::{propagate, PulseShape};
use qpulse_core::scenario::{load_scenario, Scenario};

fn shipped(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    load_scenario(&path).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn soliton_scenario_is_anomalous_and_nearly_lossless() {
    let s = shipped("soliton.scenario");
    let k2 = s.expansion.k2().re;
    println!("k = {:?}", s.expansion.k);
    assert!(k2 < -2.0e-26 && k2 > -3.5e-26, "k2 = {k2:e}");
    assert!(s.expansion.k0i() < 1e-4);
    let n = s.expansion.k[0].re * 299_792_458.0 / s.expansion.omega0;
    assert!((n - 1.444).abs() < 2e-3, "n = {n}");
    match s.pulse {
        PulseShape::Sech { width, .. } => assert_eq!(width, 1.0e-13),
        other => panic!("{other:?}"),
    }
    assert!(s.target_step() > 1e-5);
}

#[test]
fn lorentz_scenario_has_a_resolved_line() {
    let s = shipped("lorentz.scenario");
    let r = s.medium.resonances()[0];
    let grid: Vec<f64> = (0..4096).map(|i| r.omega_r * (0.1 + 9.9 * i as f64 / 4095.0)).collect();
    let report = kk_check(&s.medium, &grid).unwrap();
    assert!(report.residual < 1e-3, "{report:?}");
    let eps = permittivity(&s.medium, s.expansion.omega0).unwrap();
    assert!(eps.im / eps.re < 1e-2);
    let plan = s.linear.unwrap();
    assert_eq!(plan.omegas().len(), 33);
}

#[test]
fn short_scenarios_stay_narrow_band() {
    for name in ["soliton.scenario", "lorentz.scenario"] {
        let s = shipped(name);
        let r = propagate(&s).unwrap();
        assert!(r.max_leakage() < 1e-4, "{name}: leakage {}", r.max_leakage());
    }
    let mut s = shipped("thermal_loss.scenario");
    s.trajectories = 200;
    let r = propagate(&s).unwrap();
    assert!(r.max_leakage() < 1e-4, "thermal_loss: leakage {}", r.max_leakage());
}
