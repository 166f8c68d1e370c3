//! Black-Scholes forward prices (unit spot, zero rates), implied volatility
//! and small-maturity price expansions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::brent;
use crate::special::{erf_fn, mills, norm_cdf, norm_pdf};

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

fn check(tau: f64, sigma: f64) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    if !(sigma > 0.0) || sigma.is_nan() {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(())
}

/// Intrinsic value (1 - e^k)^+ of the call.
pub fn intrinsic(k: f64) -> f64 {
    if k < 0.0 {
        -k.exp_m1()
    } else {
        0.0
    }
}

/// Price of the out-of-the-money option: call for k >= 0, put for k < 0.
///
/// Deep out of the money both normal tails are written through the Mills
/// ratio so that the difference keeps full relative precision.
pub fn bs_otm(k: f64, tau: f64, sigma: f64) -> Result<f64> {
    check(tau, sigma)?;
    let x = sigma * tau.sqrt();
    if !x.is_finite() {
        return Ok(if k >= 0.0 { 1.0 } else { k.exp() });
    }
    let dp = -k / x + 0.5 * x;
    let dm = dp - x;
    if k == 0.0 {
        return Ok(erf_fn(x / (2.0 * std::f64::consts::SQRT_2)));
    }
    let v = if k > 0.0 {
        if dp < 0.0 {
            // N(d+) - e^k N(d-) = phi(d+) [m(-d+) - m(-d-)]
            norm_pdf(dp) * (mills(-dp) - mills(-dm))
        } else {
            norm_cdf(dp) - k.exp() * norm_cdf(dm)
        }
    } else if dm > 0.0 {
        // e^k N(-d-) - N(-d+) = phi(d+) [m(d-) - m(d+)]
        norm_pdf(dp) * (mills(dm) - mills(dp))
    } else {
        k.exp() * norm_cdf(-dm) - norm_cdf(-dp)
    };
    Ok(v.max(0.0))
}

/// Forward call price N(d+) - e^k N(d-).
pub fn bs_call(k: f64, tau: f64, sigma: f64) -> Result<f64> {
    let otm = bs_otm(k, tau, sigma)?;
    Ok(if k < 0.0 { intrinsic(k) + otm } else { otm })
}

/// Forward put price e^k N(-d-) - N(-d+).
pub fn bs_put(k: f64, tau: f64, sigma: f64) -> Result<f64> {
    let otm = bs_otm(k, tau, sigma)?;
    Ok(if k > 0.0 { otm + k.exp_m1() } else { otm })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpliedVol {
    pub sigma: f64,
    /// The price was within 1e-15 of intrinsic, so the vol is at the mercy of
    /// rounding in the input.
    pub low_precision: bool,
}

/// Implied volatility from a call price.
pub fn implied_vol(price: f64, k: f64, tau: f64) -> Result<ImpliedVol> {
    let intr = intrinsic(k);
    if !(price > intr && price < 1.0) {
        return Err(Error::Domain(format!("call price {price} outside ({intr}, 1) at k = {k}")));
    }
    // put for k < 0
    let otm = price - intr;
    let mut iv = implied_vol_otm(otm, k, tau)?;
    iv.low_precision = price - intr < 1e-15;
    Ok(iv)
}

/// Implied volatility from the out-of-the-money price (call for k >= 0, put
/// for k < 0). Works in log-price so deep OTM quotes keep relative accuracy.
pub fn implied_vol_otm(otm_price: f64, k: f64, tau: f64) -> Result<ImpliedVol> {
    let upper = if k < 0.0 { k.exp() } else { 1.0 };
    if !(otm_price > 0.0 && otm_price < upper) {
        return Err(Error::Domain(format!("OTM price {otm_price} outside (0, {upper}) at k = {k}")));
    }
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be > 0, got {tau}")));
    }
    let target = otm_price.ln();
    let f = |s: f64| match bs_otm(k, tau, s) {
        Ok(p) if p > 0.0 => p.ln() - target,
        _ => f64::NEG_INFINITY,
    };
    let mut lo = 1e-3;
    while f(lo) > 0.0 {
        lo *= 0.1;
        if lo < 1e-12 {
            return Err(Error::Solver(format!("implied vol below {lo}")));
        }
    }
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(Error::Solver(format!("implied vol above {hi}")));
        }
    }
    let sigma = brent(f, lo, hi, 0.0, 300)?;
    Ok(ImpliedVol { sigma, low_precision: false })
}

/// Small-maturity expansion of the forward-start call for k != 0.
pub fn bs_forward_smalltau(k: f64, tau: f64, sigma: f64) -> Result<f64> {
    check(tau, sigma)?;
    if k == 0.0 {
        return Err(Error::InvalidParameter("expansion needs k != 0".into()));
    }
    let s2t = sigma * sigma * tau;
    let lead = (0.5 * k - k * k / (2.0 * s2t)).exp() * s2t.powf(1.5) / (k * k * SQRT_2PI);
    Ok(intrinsic(k) + lead * (1.0 - (3.0 / (k * k) + 0.125) * s2t))
}

/// At-the-money expansion (sigma sqrt(tau) - sigma^3 tau^{3/2} / 24) / sqrt(2 pi).
pub fn bs_atm_smalltau(tau: f64, sigma: f64) -> f64 {
    let x = sigma * tau.sqrt();
    (x - x * x * x / 24.0) / SQRT_2PI
}
