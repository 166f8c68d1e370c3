#![allow(clippy::excessive_precision)]
// Prices checked against tests/oracles/fourier_oracle.py (mpmath, Lewis
// integral along Re z = 1/2, 30 digits).

use fwdsmile_core::bsm::{bs_call, implied_vol};
use fwdsmile_core::fourier::*;
use fwdsmile_core::{ForwardTenor, HestonParams};

fn sec5() -> HestonParams {
    HestonParams::new(1.0, 0.07, 0.52, -0.8, 0.07).unwrap()
}

fn tenor(t: f64, tau: f64, k: f64) -> ForwardTenor {
    ForwardTenor::new(t, tau, k).unwrap()
}

#[test]
fn oracle_prices() {
    let q = QuadratureSettings::default();
    for (t, tau, k, want) in [
        (1.0, 1.0 / 12.0, 0.2, 0.00061240496692966886),
        (1.0, 1.0 / 12.0, -0.15, 0.14177719034861543),
        (0.5, 0.25, 0.1, 0.011784626115742103),
    ] {
        let r = forward_call(&tenor(t, tau, k), &sec5(), &q).unwrap();
        assert!((r.price - want).abs() < 1e-12, "k={k}: {} vs {want}", r.price);
        assert!(r.flags.is_empty());
    }
}

#[test]
fn parity_direct_legs() {
    let q = QuadratureSettings::default();
    for &tau in &[1.0 / 12.0, 1.0 / 24.0] {
        for &k in &[-0.4, -0.2, -0.02, 0.02, 0.2, 0.4] {
            let c = forward_call_direct(&tenor(1.0, tau, k), &sec5(), &q).unwrap();
            let p = forward_put_direct(&tenor(1.0, tau, k), &sec5(), &q).unwrap();
            let res = c.price - p.price - (1.0 - k.exp());
            assert!(res.abs() < 1e-9, "tau={tau} k={k} {res}");
        }
    }
}

#[test]
fn digitals_complement() {
    let q = QuadratureSettings::default();
    for &k in &[-0.3, -0.05, 0.0, 0.1, 0.25] {
        let t = tenor(1.0, 1.0 / 12.0, k);
        let a = forward_digital(&t, &sec5(), &q, DigitalSide::Above).unwrap().price;
        let b = forward_digital(&t, &sec5(), &q, DigitalSide::Below).unwrap().price;
        assert!((a + b - 1.0).abs() < 1e-9, "k={k}");
        assert!((0.0..=1.0).contains(&a));
    }
}

#[test]
fn digital_is_strike_derivative() {
    // -dC/dk = e^k P(X >= k)
    let q = QuadratureSettings::default();
    let (k, h) = (0.1, 1e-4);
    let up = forward_call(&tenor(1.0, 0.25, k + h), &sec5(), &q).unwrap().price;
    let dn = forward_call(&tenor(1.0, 0.25, k - h), &sec5(), &q).unwrap().price;
    let p = forward_digital(&tenor(1.0, 0.25, k), &sec5(), &q, DigitalSide::Above).unwrap().price;
    let fd = -(up - dn) / (2.0 * h) * (-k).exp();
    assert!((fd - p).abs() < 1e-7, "{fd} {p}");
}

#[test]
fn damping_does_not_change_price() {
    let t = tenor(1.0, 1.0 / 12.0, 0.1);
    let auto = forward_call(&t, &sec5(), &QuadratureSettings::default()).unwrap();
    for a in [2.0, 5.0, 10.0] {
        let q = QuadratureSettings { damping: Some(a), ..Default::default() };
        let r = forward_call(&t, &sec5(), &q).unwrap();
        assert!((r.price - auto.price).abs() < 1e-11, "alpha={a}: {} {}", r.price, auto.price);
        assert_eq!(r.damping, a);
    }
}

#[test]
fn short_start_matches_spot() {
    let q = QuadratureSettings::default();
    for &k in &[-0.1, 0.05, 0.2] {
        let f = forward_call(&tenor(1e-8, 0.5, k), &sec5(), &q).unwrap().price;
        let s = spot_call(k, 0.5, &sec5(), &q).unwrap().price;
        assert!((f - s).abs() < 1e-8, "k={k}");
    }
}

#[test]
fn tiny_vol_of_vol_is_black_scholes() {
    // with xi -> 0 and v = theta the variance is frozen
    let p = HestonParams::new(1.0, 0.04, 1e-4, 0.0, 0.04).unwrap();
    let q = QuadratureSettings::default();
    for &k in &[-0.2, 0.0, 0.15] {
        let h = forward_call(&tenor(0.5, 0.5, k), &p, &q).unwrap().price;
        let b = bs_call(k, 0.5, 0.2).unwrap();
        assert!((h - b).abs() < 1e-7, "k={k} {h} {b}");
    }
}

#[test]
fn smile_roundtrip() {
    let q = QuadratureSettings::default();
    let t = tenor(1.0, 1.0 / 12.0, 0.2);
    let s = forward_smile(&t, &sec5(), &q).unwrap();
    assert!(!s.low_confidence);
    let iv = implied_vol(s.price.price, 0.2, 1.0 / 12.0).unwrap();
    assert!((iv.sigma - s.vol).abs() < 1e-10);
    assert!((s.vol - 0.324911).abs() < 1e-6);
}

#[test]
fn very_short_maturity_keeps_relative_accuracy() {
    let q = QuadratureSettings::default();
    let r = forward_call(&tenor(1.0, 1e-3, 0.3), &sec5(), &q).unwrap();
    assert!(r.extrinsic > 0.0 && r.extrinsic < 1e-20);
    assert!(r.est_error < 1e-6 * r.extrinsic);
    let s = forward_smile(&tenor(1.0, 1e-3, 0.2), &sec5(), &q).unwrap();
    assert!(s.vol > 0.8 && s.vol < 0.9);
}

#[test]
fn bad_settings_rejected() {
    let q = QuadratureSettings { abs_tol: 0.0, ..Default::default() };
    assert!(forward_call(&tenor(1.0, 0.1, 0.0), &sec5(), &q).is_err());
}
