//! At-the-money forward implied volatility through the moments of the
//! variance process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heston::beta_t;
use crate::params::{ExtendedReal, HestonParams};
use crate::special::{kummer_m_scaled, ln_gamma};

pub use crate::special::kummer_m;

/// E[V_t^p], infinite for p <= -2 kappa theta / xi^2.
pub fn delta_moment(t: f64, p: f64, params: &HestonParams) -> Result<ExtendedReal> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    if !p.is_finite() {
        return Err(Error::InvalidParameter(format!("p must be finite, got {p}")));
    }
    let s = params.cir_shape();
    if p <= -s {
        return Ok(ExtendedReal::PosInfinity);
    }
    let bt = beta_t(params, t);
    let z = params.v() * (-params.kappa() * t).exp() / (2.0 * bt);
    let m = kummer_m_scaled(s + p, s, z)?;
    let ln = p * (2.0 * bt).ln() + ln_gamma(s + p) - ln_gamma(s) + m.ln();
    Ok(ExtendedReal::Finite(ln.exp()))
}

fn finite_moment(t: f64, p: f64, params: &HestonParams) -> Result<f64> {
    delta_moment(t, p, params)?
        .finite()
        .ok_or_else(|| Error::Domain(format!("moment of order {p} is infinite")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AtmRegime {
    FellerStrict,
    Degenerate,
}

impl AtmRegime {
    pub fn of(params: &HestonParams) -> Self {
        let p = params;
        if 4.0 * p.kappa() * p.theta() > p.xi() * p.xi() && !p.feller_equality() {
            AtmRegime::FellerStrict
        } else {
            AtmRegime::Degenerate
        }
    }
}

/// sigma(0) ~ sigma0 + sigma1 tau as tau -> 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmExpansion {
    pub sigma0: f64,
    pub sigma1: Option<f64>,
    pub regime: AtmRegime,
}

impl AtmExpansion {
    pub fn vol(&self, tau: f64) -> f64 {
        self.sigma0 + self.sigma1.map_or(0.0, |s| s * tau)
    }
}

pub fn atm_expansion(t: f64, params: &HestonParams) -> Result<AtmExpansion> {
    let regime = AtmRegime::of(params);
    let d_half = finite_moment(t, 0.5, params)?;
    let sigma1 = match regime {
        AtmRegime::FellerStrict => {
            let p = params;
            let d_mhalf = finite_moment(t, -0.5, p)?;
            let xi2 = p.xi() * p.xi();
            let rho = p.rho();
            Some(
                d_mhalf / 4.0 * (p.kappa() * p.theta() + xi2 * (rho * rho - 4.0) / 24.0)
                    + d_half / 8.0 * (rho * p.xi() - 2.0 * p.kappa()),
            )
        }
        AtmRegime::Degenerate => None,
    };
    Ok(AtmExpansion { sigma0: d_half, sigma1, regime })
}

/// Spot ATM smile coefficients as functions of the current variance V:
/// each term is (coefficient, power of V).
pub fn future_vol_terms(index: u8, params: &HestonParams) -> Result<Vec<(f64, f64)>> {
    let p = params;
    match index {
        0 => Ok(vec![(1.0, 0.5)]),
        1 => {
            let xi2 = p.xi() * p.xi();
            let rho = p.rho();
            Ok(vec![
                ((p.kappa() * p.theta() + xi2 * (rho * rho - 4.0) / 24.0) / 4.0, -0.5),
                ((rho * p.xi() - 2.0 * p.kappa()) / 8.0, 0.5),
            ])
        }
        _ => Err(Error::OrderUnavailable { requested: index, max: 1 }),
    }
}

/// Forward ATM coefficient as the time-0 expectation of the spot coefficient at V_t.
pub fn atm_from_future_vol_moments(index: u8, t: f64, params: &HestonParams) -> Result<f64> {
    if index == 1 && AtmRegime::of(params) == AtmRegime::Degenerate {
        return Err(Error::Domain("E[V_t^{-1/2}] is infinite when 4 kappa theta <= xi^2".into()));
    }
    let mut acc = 0.0;
    for (c, pw) in future_vol_terms(index, params)? {
        acc += c * finite_moment(t, pw, params)?;
    }
    Ok(acc)
}
