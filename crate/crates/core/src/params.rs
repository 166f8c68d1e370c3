use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Heston parameters under the pricing measure (zero rates).
///
/// `kappa` mean reversion, `theta` long-run variance, `xi` vol of variance,
/// `rho` spot/variance correlation, `v` initial variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct HestonParams {
    kappa: f64,
    theta: f64,
    xi: f64,
    rho: f64,
    v: f64,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    kappa: f64,
    theta: f64,
    xi: f64,
    rho: f64,
    v: f64,
}

impl TryFrom<RawParams> for HestonParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        HestonParams::new(r.kappa, r.theta, r.xi, r.rho, r.v)
    }
}

impl From<HestonParams> for RawParams {
    fn from(p: HestonParams) -> Self {
        RawParams { kappa: p.kappa, theta: p.theta, xi: p.xi, rho: p.rho, v: p.v }
    }
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl HestonParams {
    pub fn new(kappa: f64, theta: f64, xi: f64, rho: f64, v: f64) -> Result<Self> {
        positive("kappa", kappa)?;
        positive("theta", theta)?;
        positive("xi", xi)?;
        positive("v", v)?;
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("rho must lie in (-1, 1), got {rho}")));
        }
        Ok(HestonParams { kappa, theta, xi, rho, v })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn v(&self) -> f64 {
        self.v
    }

    /// sqrt(1 - rho^2)
    pub fn rho_bar(&self) -> f64 {
        ((1.0 - self.rho) * (1.0 + self.rho)).sqrt()
    }

    /// 2 kappa theta / xi^2, the CIR shape parameter.
    pub fn cir_shape(&self) -> f64 {
        2.0 * self.kappa * self.theta / (self.xi * self.xi)
    }

    /// True when 4 kappa theta = xi^2 up to a relative 1e-12.
    pub fn feller_equality(&self) -> bool {
        let a = 4.0 * self.kappa * self.theta;
        let b = self.xi * self.xi;
        (a - b).abs() <= 1e-12 * a.max(b)
    }

    pub fn with_rho(&self, rho: f64) -> Result<Self> {
        HestonParams::new(self.kappa, self.theta, self.xi, rho, self.v)
    }

    pub fn with_xi(&self, xi: f64) -> Result<Self> {
        HestonParams::new(self.kappa, self.theta, xi, self.rho, self.v)
    }
}

/// Forward-start contract: start date `t`, remaining maturity `tau`, log-strike `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForwardTenor {
    pub t: f64,
    pub tau: f64,
    pub k: f64,
}

impl ForwardTenor {
    pub fn new(t: f64, tau: f64, k: f64) -> Result<Self> {
        let tenor = ForwardTenor { t, tau, k };
        tenor.validate()?;
        Ok(tenor)
    }

    pub fn validate(&self) -> Result<()> {
        positive("t", self.t)?;
        positive("tau", self.tau)?;
        if !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!("k must be finite, got {}", self.k)));
        }
        Ok(())
    }
}

/// A real number or +infinity. Used for the forward lmgf and explosion times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::PosInfinity => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}
