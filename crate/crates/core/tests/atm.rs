#![allow(clippy::excessive_precision)]
// Feller moments checked against tests/oracles/asymptotics_oracle.py, which
// evaluates both the hypergeometric form and a direct integral against the
// noncentral chi-square density.

use fwdsmile_core::atm::*;
use fwdsmile_core::{ExtendedReal, HestonParams};

fn fig3() -> HestonParams {
    HestonParams::new(1.0, 0.07, 0.4, -0.6, 0.07).unwrap()
}

fn sec5() -> HestonParams {
    HestonParams::new(1.0, 0.07, 0.52, -0.8, 0.07).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn moments_reference() {
    for (t, half, mhalf) in [
        (0.25, 0.24881160771381901, 5.0713220714959579),
        (1.0, 0.23350312773309727, 7.3564438602030867),
        (2.0, 0.23104731417277163, 7.6580515143840304),
    ] {
        let d = delta_moment(t, 0.5, &fig3()).unwrap().to_f64();
        assert!(rel(d, half) < 1e-13, "t={t} {d}");
        let d = delta_moment(t, -0.5, &fig3()).unwrap().to_f64();
        assert!(rel(d, mhalf) < 1e-13, "t={t} {d}");
    }
}

#[test]
fn feller_mean_grid() {
    for &(kappa, theta, xi, v) in &[(1.0, 0.07, 0.4, 0.07), (2.0, 0.04, 0.3, 0.09), (0.5, 0.1, 0.9, 0.02), (3.0, 0.05, 0.2, 0.2)] {
        let p = HestonParams::new(kappa, theta, xi, -0.5, v).unwrap();
        for &t in &[0.01, 0.1, 0.5, 1.0, 3.0] {
            let want = theta + (v - theta) * (-kappa * t).exp();
            let got = delta_moment(t, 1.0, &p).unwrap().to_f64();
            assert!((got - want).abs() < 1e-12, "{kappa} {t}: {got} {want}");
            let h = delta_moment(t, 0.5, &p).unwrap().to_f64();
            assert!(h * h <= got * (1.0 + 1e-14));
        }
    }
}

#[test]
fn short_start_limit() {
    for p in [fig3(), sec5()] {
        let d = delta_moment(1e-6, 0.5, &p).unwrap().to_f64();
        assert!(rel(d, 0.07f64.sqrt()) < 1e-5, "{d}");
        let e = atm_expansion(1e-6, &p).unwrap();
        assert!(rel(e.sigma0, 0.07f64.sqrt()) < 1e-5);
    }
}

#[test]
fn explodes_below_threshold() {
    let p = sec5();
    let s = p.cir_shape();
    assert_eq!(delta_moment(1.0, -s - 0.1, &p).unwrap(), ExtendedReal::PosInfinity);
}

#[test]
fn regimes() {
    assert_eq!(atm_expansion(1.0, &sec5()).unwrap().regime, AtmRegime::FellerStrict);
    assert!(atm_expansion(1.0, &sec5()).unwrap().sigma1.is_some());
    assert_eq!(atm_expansion(1.0, &fig3()).unwrap().regime, AtmRegime::FellerStrict);
    let eq = sec5().with_xi(0.28f64.sqrt()).unwrap();
    assert_eq!(atm_expansion(1.0, &eq).unwrap().regime, AtmRegime::Degenerate);
}

#[test]
fn kummer_reexport() {
    assert_eq!(kummer_m(0.3, 1.2, 0.0).unwrap(), 1.0);
    let mut prev = 0.0;
    for i in 0..20 {
        let m = kummer_m(0.6, 1.3, i as f64 * 2.5).unwrap();
        assert!(m > prev);
        prev = m;
    }
}
