use std::path::PathBuf;

use fwdsmile_core::asymptotics::{log_u_star_prefactor, measure_changed_cf_at, otm_coefficients, rate_function, CoefficientSet};
use fwdsmile_core::atm::{atm_expansion, AtmExpansion};
use fwdsmile_core::fourier::{forward_call_direct, forward_digital, forward_put_direct, forward_smile, DigitalSide};
use fwdsmile_core::heston::{beta_t, e_tau_at, saddlepoint_with, ForwardLmgf};
use fwdsmile_core::ForwardTenor;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::HarnessError;

/// Strike for the expansion residual checks.
pub const DIAG_STRIKE: f64 = 0.2;
/// Maturities for the tail-probability trend.
pub const LDP_TAUS: [f64; 4] = [1.0 / 12.0, 1.0 / 24.0, 1.0 / 50.0, 1.0 / 100.0];
/// Points where the rescaled characteristic function is compared.
pub const PHI_POINTS: [f64; 3] = [0.5, 1.0, 2.0];
/// Maturity at which the ATM halving test starts.
pub const ATM_TAU: f64 = 1.0 / 12.0;
/// "Bounded" residual: max/min over the tau grid below this.
pub const BAND: f64 = 3.0;
/// Maturities for the put-call parity sweep.
pub const PARITY_TAUS: [f64; 2] = [1.0 / 12.0, 1.0 / 24.0];

/// Test hook: add `delta` to one named coefficient after it is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fault {
    pub coefficient: String,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagReport {
    pub passed: bool,
    pub engine_version: String,
    pub settings_hash: String,
    pub checks: Vec<Check>,
}

impl DiagReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, passed: bool, detail: String, values: Vec<f64>) -> Check {
    Check { name: name.to_string(), passed, detail, values }
}

fn failed(name: &str, e: impl std::fmt::Display) -> Check {
    check(name, false, format!("error: {e}"), vec![])
}

fn spread(v: &[f64]) -> f64 {
    let mx = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mn = v.iter().cloned().fold(f64::INFINITY, f64::min);
    mx / mn
}

fn banded(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite() && *x > 0.0) && spread(v) < BAND
}

// no later value above BAND times the first
fn bounded(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.iter().skip(1).all(|x| x.abs() <= BAND * v[0].abs())
}

fn apply_coefficient_fault(c: &mut CoefficientSet, fault: Option<&Fault>) -> Result<(), HarnessError> {
    let Some(f) = fault else { return Ok(()) };
    if f.coefficient == "sigma0" || f.coefficient == "sigma1" {
        return Ok(());
    }
    let mut val = serde_json::to_value(*c).map_err(|e| HarnessError::Config(e.to_string()))?;
    let slot = val
        .get_mut(&f.coefficient)
        .and_then(|x| x.as_f64().map(|v| (x, v)))
        .ok_or_else(|| HarnessError::Config(format!("unknown coefficient '{}'", f.coefficient)))?;
    *slot.0 = serde_json::json!(slot.1 + f.delta);
    *c = serde_json::from_value(val).map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(())
}

fn apply_atm_fault(a: &mut AtmExpansion, fault: Option<&Fault>) {
    match fault {
        Some(f) if f.coefficient == "sigma0" => a.sigma0 += f.delta,
        Some(f) if f.coefficient == "sigma1" => a.sigma1 = a.sigma1.map(|s| s + f.delta),
        _ => {}
    }
}

fn martingale(cfg: &RunConfig) -> Check {
    let mut vals = vec![];
    for &tau in &cfg.tau_list {
        match ForwardLmgf::new(&cfg.params, cfg.t, tau) {
            Ok(f) => vals.push(f.value(1.0, 1.0).to_f64().abs()),
            Err(e) => return failed("martingale", e),
        }
    }
    let worst = vals.iter().cloned().fold(0.0, f64::max);
    check("martingale", worst < 1e-10, format!("max |Lambda(1)| = {worst:e}"), vals)
}

fn parity(cfg: &RunConfig) -> Check {
    let mut worst: f64 = 0.0;
    for &tau in &PARITY_TAUS {
        for &k in &cfg.k_grid {
            let res = ForwardTenor::new(cfg.t, tau, k).and_then(|tn| {
                let c = forward_call_direct(&tn, &cfg.params, &cfg.quadrature)?.price;
                let p = forward_put_direct(&tn, &cfg.params, &cfg.quadrature)?.price;
                Ok(c - p - (1.0 - k.exp()))
            });
            match res {
                Ok(r) => worst = worst.max(r.abs()),
                Err(e) => return failed("parity", format!("tau={tau} k={k}: {e}")),
            }
        }
    }
    check("parity", worst < 1e-9, format!("max residual {worst:e}"), vec![worst])
}

struct Expansion {
    coeffs: CoefficientSet,
    lmgfs: Vec<(f64, ForwardLmgf, f64)>,
}

fn expansion_inputs(cfg: &RunConfig, fault: Option<&Fault>) -> Result<Expansion, HarnessError> {
    let mut coeffs = otm_coefficients(DIAG_STRIKE, cfg.t, &cfg.params).map_err(HarnessError::Numeric)?;
    apply_coefficient_fault(&mut coeffs, fault)?;
    let mut lmgfs = vec![];
    for &tau in &cfg.tau_list {
        let f = ForwardLmgf::new(&cfg.params, cfg.t, tau).map_err(HarnessError::Numeric)?;
        let us = saddlepoint_with(&f, DIAG_STRIKE).map_err(HarnessError::Numeric)?;
        lmgfs.push((tau, f, us));
    }
    Ok(Expansion { coeffs, lmgfs })
}

fn saddlepoint_order(x: &Expansion) -> Check {
    let v: Vec<f64> = x.lmgfs.iter().map(|(tau, _, us)| (us - x.coeffs.saddlepoint(*tau)).abs() / tau).collect();
    check("saddlepoint_residual", banded(&v), format!("|u* - expansion| / tau, spread {:.3}", spread(&v)), v)
}

fn e_tau_order(x: &Expansion) -> Check {
    let mut v = vec![];
    for (tau, f, us) in &x.lmgfs {
        match e_tau_at(f, *us) {
            Ok(e) => v.push((e - x.coeffs.e_tau(*tau)).abs() / tau.powf(0.75)),
            Err(err) => return failed("e_tau_residual", err),
        }
    }
    check("e_tau_residual", banded(&v), format!("|e_tau - expansion| / tau^(3/4), spread {:.3}", spread(&v)), v)
}

fn phi_residual(x: &Expansion) -> Check {
    let mut v = vec![];
    let mut ok = true;
    let mut detail = String::new();
    for &u in &PHI_POINTS {
        let mut row = vec![];
        for (tau, f, us) in &x.lmgfs {
            match measure_changed_cf_at(f, *us, u, DIAG_STRIKE) {
                Ok(phi) => row.push((phi - x.coeffs.gaussian_cf(u, *tau)).norm() / tau.powf(0.375)),
                Err(e) => return failed("phi_residual", e),
            }
        }
        ok &= banded(&row);
        detail.push_str(&format!("u={u}: spread {:.3}; ", spread(&row)));
        v.extend(row);
    }
    check("phi_residual", ok, detail.trim_end().to_string(), v)
}

fn prefactor_ratio(cfg: &RunConfig, x: &Expansion) -> Check {
    let mut v = vec![];
    for (tau, _, _) in &x.lmgfs {
        match log_u_star_prefactor(DIAG_STRIKE, cfg.t, *tau, &cfg.params) {
            Ok(l) => v.push((l - x.coeffs.log_prefactor(*tau)).abs() / tau.sqrt()),
            Err(e) => return failed("prefactor_log_ratio", e),
        }
    }
    check(
        "prefactor_log_ratio",
        bounded(&v),
        "|log exact - log closed form| / sqrt(tau)".to_string(),
        v,
    )
}

fn ldp_trend(cfg: &RunConfig) -> Check {
    let target = rate_function(DIAG_STRIKE, beta_t(&cfg.params, cfg.t));
    let mut v = vec![];
    for &tau in &LDP_TAUS {
        let res = ForwardTenor::new(cfg.t, tau, DIAG_STRIKE)
            .and_then(|tn| forward_digital(&tn, &cfg.params, &cfg.quadrature, DigitalSide::Above));
        match res {
            Ok(p) if p.price > 0.0 => v.push(-tau.sqrt() * p.price.ln()),
            Ok(p) => return failed("ldp_trend", format!("non-positive probability {} at tau={tau}", p.price)),
            Err(e) => return failed("ldp_trend", e),
        }
    }
    let gaps: Vec<f64> = v.iter().map(|y| (y - target).abs()).collect();
    let ok = v.windows(2).all(|w| w[1] < w[0]) && gaps.windows(2).all(|w| w[1] < w[0]);
    check("ldp_trend", ok, format!("-sqrt(tau) log P(X >= k) against rate {target:.6}"), v)
}

fn atm_halving(cfg: &RunConfig, fault: Option<&Fault>) -> Check {
    let mut e = match atm_expansion(cfg.t, &cfg.params) {
        Ok(e) => e,
        Err(err) => return failed("atm_halving", err),
    };
    apply_atm_fault(&mut e, fault);
    let Some(s1) = e.sigma1 else {
        return check("atm_halving", true, "skipped: no first-order term in this regime".into(), vec![]);
    };
    let mut d = vec![];
    for tau in [ATM_TAU, 0.5 * ATM_TAU] {
        let res = ForwardTenor::new(cfg.t, tau, 0.0).and_then(|tn| forward_smile(&tn, &cfg.params, &cfg.quadrature));
        match res {
            Ok(s) => d.push((s.vol - e.sigma0, s.vol - e.sigma0 - s1 * tau)),
            Err(err) => return failed("atm_halving", err),
        }
    }
    let bound = (d[0].0).abs() < 2.0 * s1.abs() * ATM_TAU;
    let ratio = d[0].1.abs() / d[1].1.abs();
    check(
        "atm_halving",
        bound && ratio > 2.0,
        format!("zeroth-order gap {:e} vs bound {:e}; halving ratio {ratio:.3}", d[0].0.abs(), 2.0 * s1.abs() * ATM_TAU),
        vec![d[0].0, d[0].1, d[1].1, ratio],
    )
}

pub fn run_diagnostics_with(cfg: &RunConfig, fault: Option<&Fault>) -> Result<DiagReport, HarnessError> {
    cfg.validate()?;
    if let Some(f) = fault {
        // reject unknown names before any work
        let mut probe = otm_coefficients(DIAG_STRIKE, cfg.t, &cfg.params).map_err(HarnessError::Numeric)?;
        apply_coefficient_fault(&mut probe, Some(f))?;
    }
    let mut checks = vec![martingale(cfg), parity(cfg)];
    match expansion_inputs(cfg, fault) {
        Ok(x) => {
            checks.push(saddlepoint_order(&x));
            checks.push(e_tau_order(&x));
            checks.push(phi_residual(&x));
            checks.push(prefactor_ratio(cfg, &x));
        }
        Err(HarnessError::Config(m)) => return Err(HarnessError::Config(m)),
        Err(e) => {
            for name in ["saddlepoint_residual", "e_tau_residual", "phi_residual", "prefactor_log_ratio"] {
                checks.push(failed(name, &e));
            }
        }
    }
    checks.push(ldp_trend(cfg));
    checks.push(atm_halving(cfg, fault));
    Ok(DiagReport {
        passed: checks.iter().all(|c| c.passed),
        engine_version: crate::figures::ENGINE_VERSION.to_string(),
        settings_hash: cfg.settings_hash(),
        checks,
    })
}

pub fn run_diagnostics(cfg: &RunConfig) -> Result<DiagReport, HarnessError> {
    run_diagnostics_with(cfg, None)
}

/// Run and write `diag_report.json` into the configured output directory.
pub fn write_report(cfg: &RunConfig, report: &DiagReport) -> Result<PathBuf, HarnessError> {
    std::fs::create_dir_all(&cfg.outputs).map_err(|e| HarnessError::Io(format!("{}: {e}", cfg.outputs.display())))?;
    let path = cfg.outputs.join("diag_report.json");
    let body = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Io(e.to_string()))?;
    std::fs::write(&path, body + "\n").map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}
