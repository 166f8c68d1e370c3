//! Small-maturity expansions away from the money: saddlepoint coefficients,
//! forward-start prices and the forward smile.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bsm::intrinsic;
use crate::error::{Error, Result};
use crate::heston::{beta_t, saddlepoint_with, ForwardLmgf};
use crate::params::HestonParams;

/// Strikes closer to the money than this are refused.
pub const ATM_EXCLUSION: f64 = 1e-4;

/// Large-deviation rate |k| / sqrt(beta_t).
pub fn rate_function(k: f64, beta_t: f64) -> f64 {
    k.abs() / beta_t.sqrt()
}

/// First-order correction u (u^2 rho xi - 2) / 4 of the rescaled B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct B1Hat {
    pub rho_xi: f64,
}

impl B1Hat {
    pub fn new(params: &HestonParams) -> Self {
        B1Hat { rho_xi: params.rho() * params.xi() }
    }

    pub fn value(&self, u: f64) -> f64 {
        0.25 * u * (u * u * self.rho_xi - 2.0)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        0.25 * (3.0 * u * u * self.rho_xi - 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub k: f64,
    pub t: f64,
    pub beta_t: f64,
    pub lambda_star: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub zeta: f64,
    pub r: f64,
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub psi0: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub psi3: f64,
    pub psi4: f64,
    pub phi2a: f64,
    pub phi2b: f64,
    pub phi2c: f64,
    pub z1: f64,
    pub p1: f64,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    // constants carried along for the evaluators below
    kappa_theta_over_xi2: f64,
    variance_drift: f64,
}

fn check_strike(k: f64) -> Result<()> {
    if !k.is_finite() {
        return Err(Error::InvalidParameter(format!("k must be finite, got {k}")));
    }
    if k.abs() < ATM_EXCLUSION {
        return Err(Error::Domain(format!("|k| = {} is inside the at-the-money band", k.abs())));
    }
    Ok(())
}

/// Coefficients of the saddlepoint, e_tau, characteristic-function and price
/// expansions at log-strike k and start date t.
pub fn otm_coefficients(k: f64, t: f64, params: &HestonParams) -> Result<CoefficientSet> {
    check_strike(k)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be > 0, got {t}")));
    }
    let kappa = params.kappa();
    let theta = params.theta();
    let xi = params.xi();
    let xi2 = xi * xi;
    let v = params.v();
    let kt = kappa * theta;
    let bt = beta_t(params, t);
    let sbt = bt.sqrt();
    let ak = k.abs();
    let ekt = (kappa * t).exp();
    let ve = v / ekt;
    let b1 = B1Hat::new(params);

    let a0 = k.signum() / sbt;
    let a1 = -a0 * v.sqrt() * (-0.5 * kappa * t).exp() / (2.0 * ak.sqrt() * bt.powf(0.25));
    let a2 = -kt / (k * xi2) - b1.value(a0) / a0;
    let a3 = 2.0 * bt * a1.powi(3) / (xi2 * xi2 * v * v)
        * (xi2 * v * bt * ekt * (ak * xi2 * sbt * b1.value(a0) - k * xi2 * b1.derivative(a0) - kt)
            + (2.0 * kt * bt * ekt).powi(2)
            - xi2 * xi2 * v * v / 16.0);

    let e0 = -2.0 * a1 / a0;
    let zeta = 2.0 * v.sqrt() * (-0.5 * kappa * t).exp() / e0.powf(1.5);
    let r = 0.5 * a1 * a1 - kt / (ak * xi2 * sbt);
    let e1 = -2.0 * bt * r;
    let e2 = -2.0 * bt * (a1 * a2 + a0 * a3 + a1 * b1.derivative(a0));

    let psi0 = a0 * ve / e0.powi(3) * (e0 * e0 + a0 * bt * (3.0 * a1 * e0 - 2.0 * a0 * e1));
    let psi1 = -4.0 * a0 * v * bt / ekt / e0.powi(4);
    let psi2 = ve / (2.0 * e0.powi(4)) * (4.0 * a0 * bt * (3.0 * a0 * e1 - 4.0 * a1 * e0) - 5.0 * e0 * e0);
    let psi3 = 8.0 * v * bt / ekt / e0.powi(5);
    let psi4 = ve / (2.0 * e0.powi(3))
        * ((e1 * e1 - e0 * e2) / bt - 2.0 * a0 * a1 * e0 * e1 + 2.0 * e0 * e0 * r);

    let drift = 4.0 * kt * bt / xi2;
    let phi2a = psi2 - 0.5 * psi0 * psi0 - drift * (2.0 * kt + xi2) / (e0 * e0 * xi2) - drift * a0 * psi0 / e0;
    let phi2b = psi3 - psi0 * psi1 - drift * a0 * psi1 / e0;
    let phi2c = -0.5 * psi1 * psi1;

    let shape = 2.0 * kt / xi2;
    let z1 = psi4 - a3 * k - shape * e1 / e0;
    let z2 = zeta * zeta;
    let p1 = e0 + phi2a / z2 + 3.0 * phi2b / (z2 * z2) + 15.0 * phi2c / (z2 * z2 * z2);

    let c0 = 2.0 * (a1 * k).abs();
    let c1 = ve / e0 * (a0 * a1 - e1 / (2.0 * bt * e0)) - a2 * k;
    let c2 = e0.powf(-shape);
    let c3 = z1 + p1;

    Ok(CoefficientSet {
        k,
        t,
        beta_t: bt,
        lambda_star: rate_function(k, bt),
        a0,
        a1,
        a2,
        a3,
        zeta,
        r,
        e0,
        e1,
        e2,
        psi0,
        psi1,
        psi2,
        psi3,
        psi4,
        phi2a,
        phi2b,
        phi2c,
        z1,
        p1,
        c0,
        c1,
        c2,
        c3,
        kappa_theta_over_xi2: kt / xi2,
        variance_drift: drift,
    })
}

impl CoefficientSet {
    /// a0 + a1 tau^{1/4} + a2 tau^{1/2} + a3 tau^{3/4}
    pub fn saddlepoint(&self, tau: f64) -> f64 {
        let q = tau.powf(0.25);
        self.a0 + q * (self.a1 + q * (self.a2 + q * self.a3))
    }

    /// e0 + e1 tau^{1/4} + e2 tau^{1/2}
    pub fn e_tau(&self, tau: f64) -> f64 {
        let q = tau.powf(0.25);
        self.e0 + q * (self.e1 + q * self.e2)
    }

    pub fn phi1(&self, u: f64) -> Complex64 {
        let lin = self.psi0 + self.variance_drift * self.a0 / self.e0;
        Complex64::new(0.0, u * lin + u.powi(3) * self.psi1)
    }

    pub fn phi2(&self, u: f64) -> f64 {
        let u2 = u * u;
        u2 * (self.phi2a + u2 * (self.phi2b + u2 * self.phi2c))
    }

    /// e^{-zeta^2 u^2 / 2} (1 + phi1 tau^{1/8} + phi2 tau^{1/4})
    pub fn gaussian_cf(&self, u: f64, tau: f64) -> Complex64 {
        let g = (-0.5 * self.zeta * self.zeta * u * u).exp();
        g * (1.0 + self.phi1(u) * tau.powf(0.125) + self.phi2(u) * tau.powf(0.25))
    }

    /// Closed-form log of the saddlepoint prefactor exp((-k u* + Lambda_tau(u*)) / sqrt(tau)).
    pub fn log_prefactor(&self, tau: f64) -> f64 {
        -self.lambda_star / tau.sqrt() + self.c0 / tau.powf(0.25) + self.c1
            - 0.5 * self.kappa_theta_over_xi2 * tau.ln()
            + self.c2.ln()
            + (1.0 + self.z1 * tau.powf(0.25)).ln()
    }

    /// Log of the time value from the price expansion, without the
    /// (1 + c3 tau^{1/4}) correction.
    fn log_extrinsic_leading(&self, tau: f64) -> f64 {
        -self.lambda_star / tau.sqrt()
            + self.c0 / tau.powf(0.25)
            + self.c1
            + self.k
            + (self.beta_t * self.c2 / (self.zeta * (2.0 * PI).sqrt())).ln()
            + (0.875 - 0.5 * self.kappa_theta_over_xi2) * tau.ln()
    }

    /// Time value of the forward-start call from the price expansion.
    pub fn extrinsic_price(&self, tau: f64) -> f64 {
        self.log_extrinsic_leading(tau).exp() * (1.0 + self.c3 * tau.powf(0.25))
    }

    /// Log of [`Self::extrinsic_price`]; error when the correction factor is not positive.
    pub fn log_extrinsic_price(&self, tau: f64) -> Result<f64> {
        let corr = 1.0 + self.c3 * tau.powf(0.25);
        if !(corr > 0.0) {
            return Err(Error::Domain(format!("price correction factor {corr} not positive at tau = {tau}")));
        }
        Ok(self.log_extrinsic_leading(tau) + corr.ln())
    }
}

/// Forward-start call price from the small-maturity expansion.
pub fn price_expansion(k: f64, t: f64, tau: f64, params: &HestonParams) -> Result<f64> {
    check_tau(tau)?;
    let c = otm_coefficients(k, t, params)?;
    Ok(intrinsic(k) + c.extrinsic_price(tau))
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmileExpansion {
    pub v0: f64,
    pub v1: f64,
    pub v2: Option<f64>,
    pub v3: Option<f64>,
    pub max_valid_order: u8,
    pub feller_equality: bool,
}

/// Coefficients of sigma^2 = v0 / sqrt(tau) + v1 / tau^{1/4} + v2 + v3 tau^{1/4}.
/// The last two exist only when 4 kappa theta = xi^2.
pub fn smile_coefficients(k: f64, t: f64, params: &HestonParams) -> Result<SmileExpansion> {
    check_strike(k)?;
    let bt = beta_t(params, t);
    let ak = k.abs();
    let v0 = bt.sqrt() * ak / 2.0;
    let v1 = (-0.5 * params.kappa() * t).exp() * bt.powf(0.25) * (params.v() * ak).sqrt() / 2.0;
    let feller_equality = params.feller_equality();
    if !feller_equality {
        return Ok(SmileExpansion { v0, v1, v2: None, v3: None, max_valid_order: 1, feller_equality });
    }
    let c = otm_coefficients(k, t, params)?;
    let k2 = k * k;
    let log_arg = c.c1 + (c.c2 * bt * k2 / (c.zeta * v0.powf(1.5))).ln();
    let v2 = 2.0 * v0 * v0 / k2 * log_arg + v0 * v0 / k + v1 * v1 / v0;
    let v3 = v0 / k2 * (2.0 * c.c3 * v0 - 3.0 * v1) + v1 / v0 * (2.0 * v2 - v1 * v1 / v0);
    Ok(SmileExpansion { v0, v1, v2: Some(v2), v3: Some(v3), max_valid_order: 3, feller_equality })
}

impl SmileExpansion {
    /// Squared implied vol truncated after `order` terms (0..=3).
    pub fn variance(&self, tau: f64, order: u8) -> Result<f64> {
        check_tau(tau)?;
        if order > 3 || order > self.max_valid_order {
            return Err(Error::OrderUnavailable { requested: order, max: self.max_valid_order });
        }
        let q = tau.powf(0.25);
        let mut s = self.v0 / (q * q);
        if order >= 1 {
            s += self.v1 / q;
        }
        if order >= 2 {
            s += self.v2.unwrap_or(0.0);
        }
        if order >= 3 {
            s += self.v3.unwrap_or(0.0) * q;
        }
        if !(s > 0.0) {
            return Err(Error::Domain(format!("expansion gives non-positive variance {s} at tau = {tau}")));
        }
        Ok(s)
    }

    pub fn vol(&self, tau: f64, order: u8) -> Result<f64> {
        Ok(self.variance(tau, order)?.sqrt())
    }
}

/// Squared forward implied volatility from the expansion at the given order.
pub fn smile_expansion(k: f64, t: f64, tau: f64, params: &HestonParams, order: u8) -> Result<f64> {
    smile_coefficients(k, t, params)?.variance(tau, order)
}

pub fn smile_expansion_vol(k: f64, t: f64, tau: f64, params: &HestonParams, order: u8) -> Result<f64> {
    Ok(smile_expansion(k, t, tau, params, order)?.sqrt())
}

/// Characteristic function of (X - k) / tau^{1/8} under the measure tilted at the
/// saddlepoint: exp(-iuk / tau^{1/8} + [Lambda_tau(u* + iu tau^{3/8}) - Lambda_tau(u*)] / sqrt(tau)).
pub fn measure_changed_cf(u: f64, k: f64, t: f64, tau: f64, params: &HestonParams) -> Result<Complex64> {
    check_strike(k)?;
    let lmgf = ForwardLmgf::new(params, t, tau)?;
    let u_star = saddlepoint_with(&lmgf, k)?;
    measure_changed_cf_at(&lmgf, u_star, u, k)
}

pub fn measure_changed_cf_at(lmgf: &ForwardLmgf, u_star: f64, u: f64, k: f64) -> Result<Complex64> {
    let tau = lmgf.tau();
    let a = tau.sqrt();
    let w = u_star / a;
    let base = lmgf
        .value(w, 1.0)
        .finite()
        .ok_or_else(|| Error::Domain(format!("u* = {u_star} outside the domain")))?;
    let z = Complex64::new(w, u * tau.powf(0.375) / a);
    let lam = lmgf.complex(z)?;
    Ok((lam - base - Complex64::new(0.0, u * k / tau.powf(0.125))).exp())
}

/// exp((-k u* + Lambda_tau(u*)) / sqrt(tau)) at the numerical saddlepoint.
pub fn u_star_prefactor(k: f64, t: f64, tau: f64, params: &HestonParams) -> Result<f64> {
    Ok(log_u_star_prefactor(k, t, tau, params)?.exp())
}

pub fn log_u_star_prefactor(k: f64, t: f64, tau: f64, params: &HestonParams) -> Result<f64> {
    check_strike(k)?;
    let lmgf = ForwardLmgf::new(params, t, tau)?;
    let u_star = saddlepoint_with(&lmgf, k)?;
    let w = u_star / tau.sqrt();
    let lam = lmgf.value(w, 1.0).finite().ok_or_else(|| Error::Domain("u* outside the domain".into()))?;
    Ok(-k * w + lam)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sec5() -> HestonParams {
        HestonParams::new(1.0, 0.07, 0.52, -0.8, 0.07).unwrap()
    }

    #[test]
    fn rate_function_basics() {
        assert_eq!(rate_function(0.0, 0.04), 0.0);
        assert_eq!(rate_function(-0.3, 0.04), rate_function(0.3, 0.04));
    }

    #[test]
    fn b1hat_derivative_matches_difference() {
        let b = B1Hat { rho_xi: -0.416 };
        let h = 1e-6;
        let fd = (b.value(4.8 + h) - b.value(4.8 - h)) / (2.0 * h);
        assert!((fd - b.derivative(4.8)).abs() < 1e-8);
        // B1(-u) = -B1(u)
        assert!((b.value(-2.0) + b.value(2.0)).abs() < 1e-15);
    }

    #[test]
    fn atm_band_refused() {
        assert!(matches!(otm_coefficients(5e-5, 1.0, &sec5()), Err(Error::Domain(_))));
        assert!(matches!(smile_coefficients(0.0, 1.0, &sec5()), Err(Error::Domain(_))));
    }

    #[test]
    fn gate() {
        let s = smile_coefficients(0.2, 1.0, &sec5()).unwrap();
        assert_eq!(s.max_valid_order, 1);
        assert!(s.variance(1e-3, 1).is_ok());
        assert_eq!(s.variance(1e-3, 2), Err(Error::OrderUnavailable { requested: 2, max: 1 }));
        let f = sec5().with_xi(0.28f64.sqrt()).unwrap();
        let s = smile_coefficients(0.2, 1.0, &f).unwrap();
        assert_eq!(s.max_valid_order, 3);
        assert!(s.v2.is_some() && s.v3.is_some());
        assert!(s.variance(1e-3, 3).unwrap() > 0.0);
    }

    #[test]
    fn c0_identity() {
        for &k in &[-0.4, -0.1, 0.05, 0.2, 0.35] {
            let c = otm_coefficients(k, 1.0, &sec5()).unwrap();
            let alt = 0.07 * (-1f64).exp() / (2.0 * c.e0 * c.beta_t) - c.a1 * k;
            assert!((c.c0 - alt).abs() < 1e-12 * c.c0, "k={k}");
        }
    }
}
