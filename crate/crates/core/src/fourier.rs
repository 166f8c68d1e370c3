//! Forward-start call, put and digital prices by damped Fourier inversion of
//! the forward characteristic function, and the exact forward smile.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bsm::{implied_vol_otm, intrinsic};
use crate::error::{Error, Result};
use crate::heston::ForwardLmgf;
use crate::params::{ForwardTenor, HestonParams};
use crate::quadrature::integrate_panels;
use crate::roots::golden_min;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Damping alpha; None picks the value that minimises the integrand at u = 0.
    pub damping: Option<f64>,
    /// Upper integration limit; None grows it until the tail bound is negligible.
    pub truncation: Option<f64>,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings { abs_tol: 1e-10, rel_tol: 1e-10, damping: None, truncation: None, max_subdivisions: 2000 }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter("quadrature tolerances must be > 0".into()));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter("max_subdivisions must be > 0".into()));
        }
        if let Some(u) = self.truncation {
            if !(u > 0.0) {
                return Err(Error::InvalidParameter(format!("truncation must be > 0, got {u}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PriceFlag {
    /// The truncated tail is the larger part of the error budget.
    TruncationDominated,
    /// Time value not resolved relative to its error estimate.
    NearIntrinsic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub price: f64,
    /// Price minus intrinsic value (the out-of-the-money leg for calls/puts).
    pub extrinsic: f64,
    pub est_error: f64,
    pub n_evals: usize,
    pub damping: f64,
    pub flags: Vec<PriceFlag>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigitalSide {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Payoff {
    Call,
    Put,
    Above,
    Below,
}

impl Payoff {
    // shift of the lmgf argument relative to alpha
    fn shift(self) -> f64 {
        match self {
            Payoff::Call | Payoff::Put => 1.0,
            Payoff::Above | Payoff::Below => 0.0,
        }
    }

    fn denominator(self, alpha: f64, u: f64) -> Complex64 {
        let a = Complex64::new(alpha, u);
        match self {
            Payoff::Call | Payoff::Put => a * (a + 1.0),
            Payoff::Above | Payoff::Below => a,
        }
    }

    fn sign(self) -> f64 {
        if self == Payoff::Below {
            -1.0
        } else {
            1.0
        }
    }

    // admissible damping interval given the real lmgf domain (lo, hi)
    fn alpha_range(self, lo: f64, hi: f64) -> (f64, f64) {
        match self {
            Payoff::Call => (0.0, hi - 1.0),
            Payoff::Put => (lo - 1.0, -1.0),
            Payoff::Above => (0.0, hi),
            Payoff::Below => (lo, 0.0),
        }
    }
}

struct Transform<'a> {
    lmgf: &'a ForwardLmgf,
    k: f64,
    alpha: f64,
    payoff: Payoff,
    // log of the integrand modulus at u = 0 (times pi)
    ln_norm: f64,
}

impl<'a> Transform<'a> {
    fn new(lmgf: &'a ForwardLmgf, k: f64, alpha: f64, payoff: Payoff) -> Result<Self> {
        let (lo, hi) = payoff.alpha_range(lmgf.domain(1.0).0, lmgf.domain(1.0).1);
        if !(alpha > lo && alpha < hi) {
            return Err(Error::Domain(format!("damping {alpha} outside admissible ({lo}, {hi})")));
        }
        let ln_norm = log_bound(lmgf, k, alpha, payoff)
            .ok_or_else(|| Error::Domain(format!("lmgf infinite at damping {alpha}")))?;
        Ok(Transform { lmgf, k, alpha, payoff, ln_norm })
    }

    // exp(Lambda(m + iu) - alpha k - iuk - ln_norm) / den(u); modulus 1 at u = 0
    fn complex_at(&self, u: f64) -> Result<Complex64> {
        let m = self.alpha + self.payoff.shift();
        let lam = self.lmgf.complex(Complex64::new(m, u))?;
        let w = lam - self.alpha * self.k - Complex64::new(0.0, u * self.k) - self.ln_norm;
        Ok(w.exp() / self.payoff.denominator(self.alpha, u))
    }

    fn envelope(&self, u: f64) -> f64 {
        self.complex_at(u).map(|c| c.norm() / PI).unwrap_or(f64::INFINITY)
    }

    fn scale(&self) -> f64 {
        self.ln_norm.exp()
    }
}

/// log of e^{Lambda(alpha + shift) - alpha k} / |den(0)|, an upper bound for the
/// out-of-the-money price.
fn log_bound(lmgf: &ForwardLmgf, k: f64, alpha: f64, payoff: Payoff) -> Option<f64> {
    let lam = lmgf.value(alpha + payoff.shift(), 1.0).finite()?;
    Some(lam - alpha * k - payoff.denominator(alpha, 0.0).norm().ln())
}

fn auto_damping(lmgf: &ForwardLmgf, k: f64, payoff: Payoff) -> Result<f64> {
    let (lo, hi) = lmgf.domain(1.0);
    let (a, b) = payoff.alpha_range(lo, hi);
    if !(b > a) {
        return Err(Error::Domain("no admissible damping: moment beyond the payoff pole is infinite".into()));
    }
    let pad = 1e-7 * (b - a);
    let f = |x: f64| log_bound(lmgf, k, x, payoff).unwrap_or(f64::INFINITY);
    Ok(golden_min(f, a + pad, b - pad, 1e-7 * (b - a).max(1.0)))
}

// standard deviation of X under the measure tilted by e^{mX}
fn tilted_sd(lmgf: &ForwardLmgf, m: f64) -> f64 {
    let (lo, hi) = lmgf.domain(1.0);
    let h = 1e-4 * (hi - lo).min(1.0 + m.abs());
    match (lmgf.derivative(m + h, 1.0), lmgf.derivative(m - h, 1.0)) {
        (Some(p), Some(q)) if p > q => ((p - q) / (2.0 * h)).sqrt(),
        _ => 1.0,
    }
}

const U_MAX: f64 = 1e10;

struct Integral {
    value: f64,
    error: f64,
    n_evals: usize,
    truncation_dominated: bool,
}

fn integrate_transform(tr: &Transform, q: &QuadratureSettings) -> Result<Integral> {
    let scale = tr.scale();
    let m = tr.alpha + tr.payoff.shift();
    let width = 1.0 / tilted_sd(tr.lmgf, m).max(1e-8);
    // absolute tolerance measured against the price bound when that is below 1
    let abs_s = q.abs_tol * scale.recip().min(1.0);
    let mut n_evals = 0;
    let mut fail: Option<Error> = None;
    let mut f = |u: f64| match tr.complex_at(u) {
        Ok(c) => c.re / PI,
        Err(e) => {
            fail.get_or_insert(e);
            0.0
        }
    };

    // rough size from the central part to set the tail target
    let core_end = 8.0 * width;
    let core = integrate_panels(&mut f, &[0.0, core_end], abs_s, 1e-4, 50);
    n_evals += core.n_evals;
    let target = abs_s.max(q.rel_tol * core.value.abs());

    let (upper, tail) = match q.truncation {
        Some(u) => (u, 2.0 * u * tr.envelope(u)),
        None => {
            let mut u = core_end;
            let mut tail = 2.0 * u * tr.envelope(u);
            n_evals += 1;
            while tail > 0.01 * target && u < U_MAX {
                u *= 2.0;
                tail = 2.0 * u * tr.envelope(u);
                n_evals += 1;
            }
            (u, tail)
        }
    };

    let period = if tr.k != 0.0 { PI / tr.k.abs() } else { f64::INFINITY };
    let mut breaks = vec![0.0];
    let mut x = 0.0;
    let mut step = 0.5 * width;
    while x < upper {
        x = (x + step).min(upper);
        breaks.push(x);
        step = (2.0 * step).min(period).max(step);
        if breaks.len() > 200_000 {
            return Err(Error::Quadrature(format!("integration range {upper} too long")));
        }
    }
    let budget = breaks.len() + q.max_subdivisions;
    let r = integrate_panels(&mut f, &breaks, target, q.rel_tol, budget);
    n_evals += r.n_evals;
    if let Some(e) = fail {
        return Err(e);
    }
    let quad_err = r.error;
    let total_target = abs_s.max(q.rel_tol * r.value.abs());
    if quad_err > 10.0 * total_target {
        return Err(Error::Quadrature(format!(
            "no convergence: error {:.3e} vs target {:.3e} after {} evaluations (alpha {}, U {upper})",
            quad_err * scale,
            total_target * scale,
            n_evals,
            tr.alpha
        )));
    }
    Ok(Integral {
        value: tr.payoff.sign() * r.value * scale,
        error: (quad_err + tail) * scale,
        n_evals,
        truncation_dominated: tail > quad_err,
    })
}

fn price_payoff(lmgf: &ForwardLmgf, k: f64, payoff: Payoff, q: &QuadratureSettings) -> Result<(Integral, f64)> {
    q.validate()?;
    let alpha = match q.damping {
        Some(a) => match payoff {
            // a user damping is given for the call; mirror it for the put
            Payoff::Put if a > 0.0 => -1.0 - a,
            Payoff::Below if a > 0.0 => -a,
            _ => a,
        },
        None => auto_damping(lmgf, k, payoff)?,
    };
    let tr = Transform::new(lmgf, k, alpha, payoff)?;
    Ok((integrate_transform(&tr, q)?, alpha))
}

fn flags_for(extrinsic: f64, ig: &Integral) -> Vec<PriceFlag> {
    let mut flags = Vec::new();
    if ig.truncation_dominated {
        flags.push(PriceFlag::TruncationDominated);
    }
    if !(extrinsic > 0.0) || ig.error > 1e-3 * extrinsic {
        flags.push(PriceFlag::NearIntrinsic);
    }
    flags
}

/// Call computed with the call transform (alpha > 0) whatever the strike.
pub fn forward_call_direct(tenor: &ForwardTenor, params: &HestonParams, q: &QuadratureSettings) -> Result<PriceResult> {
    tenor.validate()?;
    let lmgf = ForwardLmgf::new(params, tenor.t, tenor.tau)?;
    let (ig, alpha) = price_payoff(&lmgf, tenor.k, Payoff::Call, q)?;
    let extrinsic = ig.value - intrinsic(tenor.k);
    Ok(PriceResult { price: ig.value, extrinsic, est_error: ig.error, n_evals: ig.n_evals, damping: alpha, flags: flags_for(extrinsic, &ig) })
}

/// Put computed with the put transform (alpha < -1) whatever the strike.
pub fn forward_put_direct(tenor: &ForwardTenor, params: &HestonParams, q: &QuadratureSettings) -> Result<PriceResult> {
    tenor.validate()?;
    let lmgf = ForwardLmgf::new(params, tenor.t, tenor.tau)?;
    let (ig, alpha) = price_payoff(&lmgf, tenor.k, Payoff::Put, q)?;
    let extrinsic = ig.value - intrinsic(-tenor.k) * tenor.k.exp();
    Ok(PriceResult { price: ig.value, extrinsic, est_error: ig.error, n_evals: ig.n_evals, damping: alpha, flags: flags_for(extrinsic, &ig) })
}

fn call_via_otm(lmgf: &ForwardLmgf, k: f64, q: &QuadratureSettings) -> Result<PriceResult> {
    let payoff = if k < 0.0 { Payoff::Put } else { Payoff::Call };
    let (ig, alpha) = price_payoff(lmgf, k, payoff, q)?;
    let extrinsic = ig.value;
    Ok(PriceResult {
        price: intrinsic(k) + extrinsic,
        extrinsic,
        est_error: ig.error,
        n_evals: ig.n_evals,
        damping: alpha,
        flags: flags_for(extrinsic, &ig),
    })
}

/// Forward-start call E[(e^X - e^k)^+]. The out-of-the-money leg is integrated
/// (put for k < 0) so the time value keeps relative accuracy.
pub fn forward_call(tenor: &ForwardTenor, params: &HestonParams, q: &QuadratureSettings) -> Result<PriceResult> {
    tenor.validate()?;
    let lmgf = ForwardLmgf::new(params, tenor.t, tenor.tau)?;
    call_via_otm(&lmgf, tenor.k, q)
}

/// Spot-start Heston call over maturity tau (variance starts at v).
pub fn spot_call(k: f64, tau: f64, params: &HestonParams, q: &QuadratureSettings) -> Result<PriceResult> {
    let lmgf = ForwardLmgf::spot(params, tau)?;
    call_via_otm(&lmgf, k, q)
}

/// P(X >= k) or P(X <= k).
pub fn forward_digital(
    tenor: &ForwardTenor,
    params: &HestonParams,
    q: &QuadratureSettings,
    side: DigitalSide,
) -> Result<PriceResult> {
    tenor.validate()?;
    let lmgf = ForwardLmgf::new(params, tenor.t, tenor.tau)?;
    let payoff = match side {
        DigitalSide::Above => Payoff::Above,
        DigitalSide::Below => Payoff::Below,
    };
    let (ig, alpha) = price_payoff(&lmgf, tenor.k, payoff, q)?;
    Ok(PriceResult {
        price: ig.value,
        extrinsic: ig.value,
        est_error: ig.error,
        n_evals: ig.n_evals,
        damping: alpha,
        flags: flags_for(ig.value, &ig),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmilePoint {
    pub vol: f64,
    pub price: PriceResult,
    /// Set when the price carries the NEAR_INTRINSIC flag.
    pub low_confidence: bool,
}

/// Exact forward implied volatility sigma_{t,tau}(k).
pub fn forward_smile(tenor: &ForwardTenor, params: &HestonParams, q: &QuadratureSettings) -> Result<SmilePoint> {
    let price = forward_call(tenor, params, q)?;
    smile_from_price(tenor, price)
}

pub fn smile_from_price(tenor: &ForwardTenor, price: PriceResult) -> Result<SmilePoint> {
    let iv = implied_vol_otm(price.extrinsic, tenor.k, tenor.tau)?;
    let low_confidence = price.flags.contains(&PriceFlag::NearIntrinsic);
    Ok(SmilePoint { vol: iv.sigma, price, low_confidence })
}
