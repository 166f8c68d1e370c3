//! Normal distribution helpers, scaled complementary error function and
//! Kummer's confluent hypergeometric function.

use libm::{erf, erfc, lgamma_r};

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_PI: f64 = 1.772_453_850_905_516;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// erf(x), re-exported for small-argument ATM prices.
pub fn erf_fn(x: f64) -> f64 {
    erf(x)
}

/// exp(x^2) erfc(x).
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        // erfcx(-x) = 2 exp(x^2) - erfcx(x)
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 5.0 {
        return (x * x).exp() * erfc(x);
    }
    // continued fraction, evaluated from the tail
    let mut t = x;
    for n in (1..=60).rev() {
        t = x + 0.5 * n as f64 / t;
    }
    1.0 / (SQRT_PI * t)
}

/// Mills ratio N(-y) / phi(y).
pub fn mills(y: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * erfcx(y / SQRT_2)
}

/// ln|Gamma(x)| and the sign of Gamma(x), for x not a non-positive integer.
pub fn ln_gamma_sign(x: f64) -> (f64, f64) {
    let (l, s) = lgamma_r(x);
    (l, s as f64)
}

pub fn ln_gamma(x: f64) -> f64 {
    lgamma_r(x).0
}

fn nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

const SERIES_CAP: usize = 10_000;

/// Power series of M(a, b, z) scaled to avoid overflow: returns (s, ln_scale)
/// with M = s * exp(ln_scale).
fn kummer_series(a: f64, b: f64, z: f64) -> Result<(f64, f64)> {
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut ln_scale = 0.0;
    for n in 0..SERIES_CAP {
        let nf = n as f64;
        term *= (a + nf) / (b + nf) * z / (nf + 1.0);
        sum += term;
        if sum.abs() > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            ln_scale += 250.0 * std::f64::consts::LN_10;
        }
        if term == 0.0 || (nf > z.abs() && term.abs() <= 1e-16 * sum.abs()) {
            return Ok((sum, ln_scale));
        }
    }
    Err(Error::Solver(format!(
        "Kummer series for M({a}, {b}, {z}) did not converge in {SERIES_CAP} terms"
    )))
}

/// Large-z expansion of exp(-z) M(a, b, z); None if it does not reach
/// double precision before the terms turn around.
fn kummer_scaled_asymptotic(a: f64, b: f64, z: f64) -> Option<f64> {
    if nonpositive_integer(a) {
        return None;
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..200 {
        let nf = n as f64;
        let next = term * (b - a + nf) * (1.0 - a + nf) / ((nf + 1.0) * z);
        if next.abs() > term.abs() && n > 0 {
            return None;
        }
        term = next;
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            let (lgb, sb) = ln_gamma_sign(b);
            let (lga, sa) = ln_gamma_sign(a);
            let ln_mag = lgb - lga + (a - b) * z.ln();
            return Some(sb * sa * ln_mag.exp() * sum);
        }
    }
    None
}

/// Kummer's function M(a, b, z) = 1F1(a; b; z).
pub fn kummer_m(a: f64, b: f64, z: f64) -> Result<f64> {
    check_kummer_args(a, b, z)?;
    if z < 0.0 {
        // Kummer transformation keeps the series positive for b > a > 0
        return Ok(z.exp() * kummer_m(b - a, b, -z)?);
    }
    if z > 50.0 {
        if let Some(s) = kummer_scaled_asymptotic(a, b, z) {
            return Ok(s * z.exp());
        }
    }
    let (s, ln_scale) = kummer_series(a, b, z)?;
    Ok(s * ln_scale.exp())
}

/// exp(-z) M(a, b, z), finite for large z where M itself overflows.
pub fn kummer_m_scaled(a: f64, b: f64, z: f64) -> Result<f64> {
    check_kummer_args(a, b, z)?;
    if z < 0.0 {
        return kummer_m(b - a, b, -z);
    }
    if z > 50.0 {
        if let Some(s) = kummer_scaled_asymptotic(a, b, z) {
            return Ok(s);
        }
    }
    let (s, ln_scale) = kummer_series(a, b, z)?;
    Ok(s * (ln_scale - z).exp())
}

fn check_kummer_args(a: f64, b: f64, z: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && z.is_finite()) {
        return Err(Error::InvalidParameter(format!("non-finite Kummer argument ({a}, {b}, {z})")));
    }
    if nonpositive_integer(b) {
        return Err(Error::Domain(format!("Kummer M undefined for b = {b}")));
    }
    Ok(())
}
