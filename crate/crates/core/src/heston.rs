//! Heston forward log-moment generating function, explosion times and the
//! rescaled saddlepoint.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::params::{ExtendedReal, ForwardTenor, HestonParams};
use crate::roots::brent_with_values;

/// Scale parameter of V_t: xi^2 (1 - e^{-kappa t}) / (4 kappa).
pub fn beta_t(params: &HestonParams, t: f64) -> f64 {
    let k = params.kappa();
    params.xi() * params.xi() * (-(-k * t).exp_m1()) / (4.0 * k)
}

/// d(u) and gamma(u) = (b - d) / (b + d), with b = kappa - rho xi u and the
/// principal square root for d.
pub fn d_gamma(u: Complex64, params: &HestonParams) -> Result<(Complex64, Complex64)> {
    let (b, d) = b_d(u, params);
    let den = b + d;
    if den.norm() == 0.0 {
        return Err(Error::Degenerate(format!("b + d vanishes at u = {u}")));
    }
    Ok((d, (b - d) / den))
}

fn b_d(u: Complex64, p: &HestonParams) -> (Complex64, Complex64) {
    let xi2 = p.xi() * p.xi();
    let b = p.kappa() - p.rho() * p.xi() * u;
    let y = b * b + u * (1.0 - u) * xi2;
    (b, y.sqrt())
}

/// Explosion time of E[exp(u X_tau)] for real u.
pub fn explosion_time(u: f64, params: &HestonParams) -> ExtendedReal {
    let xi = params.xi();
    let b = params.kappa() - params.rho() * xi * u;
    let y = b * b + u * (1.0 - u) * xi * xi;
    if y < 0.0 {
        let delta = (-y).sqrt();
        ExtendedReal::Finite(2.0 / delta * delta.atan2(-b))
    } else if b < 0.0 {
        let d = y.sqrt();
        let r = d / -b;
        if r >= 1.0 {
            ExtendedReal::PosInfinity
        } else if r < 1e-6 {
            ExtendedReal::Finite(2.0 / -b * (1.0 + r * r / 3.0))
        } else {
            ExtendedReal::Finite(2.0 / d * r.atanh())
        }
    } else {
        ExtendedReal::PosInfinity
    }
}

/// (e^w - 1) / w
fn exprel(w: Complex64) -> Complex64 {
    if w.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 2..40 {
            term *= w / n as f64;
            sum += term;
            if term.norm() < 1e-17 * sum.norm() {
                break;
            }
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

const MAX_TRACK_STEPS: usize = 1 << 16;

/// log R(tau) continued from R(0) = 1, where R(s) = 1 + (b - d) s E(-d s) / 2.
fn tracked_log_r(b: Complex64, d: Complex64, tau: f64) -> Result<Complex64> {
    let bm = b - d;
    let r_at = |s: f64| 1.0 + bm * s * exprel(-d * s) * 0.5;
    let r_end = r_at(tau);
    if r_end.norm() == 0.0 {
        return Err(Error::Domain("Riccati denominator vanishes".into()));
    }
    // |gamma| < 1: R = (1 - gamma e^{-ds}) / (1 - gamma) never leaves the right
    // half plane ratio, so the principal log is the continuous one
    if bm.norm() < (b + d).norm() {
        return Ok(r_end.ln());
    }
    let mut n = 16 + (4.0 * d.norm() * tau).ceil().min(4096.0) as usize;
    while n <= MAX_TRACK_STEPS {
        let mut prev = Complex64::new(1.0, 0.0);
        let mut arg = 0.0;
        let mut ok = true;
        for j in 1..=n {
            let cur = if j == n { r_end } else { r_at(tau * j as f64 / n as f64) };
            if cur.norm() == 0.0 {
                return Err(Error::Domain("Riccati denominator vanishes".into()));
            }
            let step = (cur / prev).arg();
            if step.abs() > std::f64::consts::FRAC_PI_8 {
                ok = false;
                break;
            }
            arg += step;
            prev = cur;
        }
        if ok {
            return Ok(Complex64::new(r_end.norm().ln(), arg));
        }
        n *= 2;
    }
    Err(Error::Branch(format!("log tracking did not settle within {MAX_TRACK_STEPS} steps")))
}

/// Riccati solutions A(u, tau), B(u, tau) for complex u (zero rates).
/// The logarithm in A is continued along s in [0, tau].
pub fn ab_functions(u: Complex64, tau: f64, params: &HestonParams) -> Result<(Complex64, Complex64)> {
    let xi2 = params.xi() * params.xi();
    let (b, d) = b_d(u, params);
    let e = exprel(-d * tau);
    let r = 1.0 + (b - d) * tau * e * 0.5;
    if r.norm() == 0.0 {
        return Err(Error::Domain(format!("A, B explode at u = {u}, tau = {tau}")));
    }
    let bb = u * (u - 1.0) * tau * e / (2.0 * r);
    let log_r = tracked_log_r(b, d, tau)?;
    let aa = params.kappa() * params.theta() / xi2 * ((b - d) * tau - 2.0 * log_r);
    Ok((aa, bb))
}

/// A, B and their u-derivatives for real u.
#[derive(Debug, Clone, Copy)]
pub struct RealAb {
    pub a: f64,
    pub b: f64,
    pub da: f64,
    pub db: f64,
}

/// cosh(sqrt(y) h), sinh(sqrt(y) h)/sqrt(y) and their y-derivatives, all
/// multiplied by exp(-ln_scale).
struct CoshSinh {
    c: f64,
    s: f64,
    cy: f64,
    sy: f64,
    ln_scale: f64,
}

fn cosh_sinh(y: f64, tau: f64) -> CoshSinh {
    let h = 0.5 * tau;
    let x = y * h * h;
    if x.abs() < 1.0 {
        let mut c = 1.0;
        let mut s = 1.0;
        let mut sy = 0.0;
        let mut tc = 1.0; // x^n / (2n)!
        let mut ts = 1.0; // x^n / (2n+1)!
        let mut tsy = 1.0 / 6.0; // n x^{n-1} / (2n+1)! at n = 1
        for n in 1..30 {
            let nf = n as f64;
            tc *= x / ((2.0 * nf - 1.0) * (2.0 * nf));
            ts *= x / ((2.0 * nf) * (2.0 * nf + 1.0));
            if n > 1 {
                tsy *= x * nf / ((nf - 1.0) * (2.0 * nf) * (2.0 * nf + 1.0));
            }
            c += tc;
            s += ts;
            sy += tsy;
            if ts.abs() < 1e-18 && tc.abs() < 1e-18 && tsy.abs() < 1e-18 * sy.abs().max(1e-300) {
                break;
            }
        }
        let s = h * s;
        let sy = h * h * h * sy;
        CoshSinh { c, s, cy: 0.5 * h * s, sy, ln_scale: 0.0 }
    } else if y > 0.0 {
        let d = y.sqrt();
        let dh = d * h;
        let e2 = (-2.0 * dh).exp();
        let c = 0.5 * (1.0 + e2);
        let s = -(-2.0 * dh).exp_m1() / (2.0 * d);
        CoshSinh { c, s, cy: 0.5 * h * s, sy: (h * c - s) / (2.0 * y), ln_scale: dh }
    } else {
        let delta = (-y).sqrt();
        let (sn, cs) = (delta * h).sin_cos();
        let s = sn / delta;
        CoshSinh { c: cs, s, cy: 0.5 * h * s, sy: (h * cs - s) / (2.0 * y), ln_scale: 0.0 }
    }
}

/// A, B and derivatives at real u, or None when tau is past the explosion time.
pub fn ab_real(u: f64, tau: f64, params: &HestonParams) -> Option<RealAb> {
    if let ExtendedReal::Finite(ts) = explosion_time(u, params) {
        if tau >= ts {
            return None;
        }
    }
    let xi = params.xi();
    let xi2 = xi * xi;
    let b = params.kappa() - params.rho() * xi * u;
    let db = -params.rho() * xi;
    let y = b * b + u * (1.0 - u) * xi2;
    let dy = 2.0 * b * db + (1.0 - 2.0 * u) * xi2;
    let cs = cosh_sinh(y, tau);
    let g = cs.c + b * cs.s;
    if !(g > 0.0) {
        return None;
    }
    let dg = (cs.cy + b * cs.sy) * dy + db * cs.s;
    let kt = params.kappa() * params.theta() / xi2;
    let ln_g = cs.ln_scale + g.ln();
    let a = kt * (b * tau - 2.0 * ln_g);
    let da = kt * (db * tau - 2.0 * dg / g);
    let uu = u * (u - 1.0);
    let bb = uu * cs.s / g;
    let dbb = ((2.0 * u - 1.0) * cs.s + uu * cs.sy * dy) / g - bb * dg / g;
    Some(RealAb { a, b: bb, da, db: dbb })
}

/// Moment generating function E[exp(u V_t)] of the CIR variance.
pub fn variance_mgf(u: f64, t: f64, params: &HestonParams) -> ExtendedReal {
    let beta = beta_t(params, t);
    let den = 1.0 - 2.0 * beta * u;
    if !(den > 0.0) {
        return ExtendedReal::PosInfinity;
    }
    let ve = params.v() * (-params.kappa() * t).exp();
    ExtendedReal::Finite((ve * u / den - params.cir_shape() * den.ln()).exp())
}

/// Forward log-mgf of X = log(S_{t+tau} / S_t) for fixed (t, tau).
///
/// Values at scale `a` are a * Lambda(u / a); a = sqrt(tau) gives the rescaled
/// lmgf used by the small-maturity asymptotics.
#[derive(Debug, Clone, Copy)]
pub struct ForwardLmgf {
    params: HestonParams,
    t: f64,
    tau: f64,
    beta: f64,
    ve: f64,
    lo: f64,
    hi: f64,
}

impl ForwardLmgf {
    pub fn new(params: &HestonParams, t: f64, tau: f64) -> Result<Self> {
        ForwardTenor::new(t, tau, 0.0)?;
        Self::build(params, t, tau)
    }

    /// Spot lmgf (start date 0, V_0 = v known).
    pub fn spot(params: &HestonParams, tau: f64) -> Result<Self> {
        ForwardTenor::new(1.0, tau, 0.0)?;
        Self::build(params, 0.0, tau)
    }

    fn build(params: &HestonParams, t: f64, tau: f64) -> Result<Self> {
        let mut f = ForwardLmgf {
            params: *params,
            t,
            tau,
            beta: beta_t(params, t),
            ve: params.v() * (-params.kappa() * t).exp(),
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        };
        f.hi = f.boundary(1.0)?;
        f.lo = f.boundary(-1.0)?;
        Ok(f)
    }

    pub fn params(&self) -> &HestonParams {
        &self.params
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn tau(&self) -> f64 {
        self.tau
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn finite_at(&self, w: f64) -> bool {
        match ab_real(w, self.tau, &self.params) {
            Some(ab) => 2.0 * self.beta * ab.b < 1.0,
            None => false,
        }
    }

    // edge of the (convex) effective domain in direction `dir`
    fn boundary(&self, dir: f64) -> Result<f64> {
        let mut inside = dir;
        let mut outside = 2.0 * dir;
        let mut steps = 0;
        while self.finite_at(outside) {
            inside = outside;
            outside *= 2.0;
            steps += 1;
            if steps > 60 {
                return Err(Error::Domain("forward lmgf finite on an unbounded ray".into()));
            }
        }
        if !self.finite_at(inside) {
            // domain boundary inside [0, 1] is impossible for a martingale, but
            // the negative side can be close to 0 for extreme inputs
            inside = 0.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (inside + outside);
            if mid == inside || mid == outside {
                break;
            }
            if self.finite_at(mid) {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(inside)
    }

    /// Interior of the effective domain (lo, hi) at scale `a`.
    pub fn domain(&self, scale: f64) -> (f64, f64) {
        (scale * self.lo, scale * self.hi)
    }

    fn lv(&self, x: f64) -> Option<(f64, f64)> {
        let den = 1.0 - 2.0 * self.beta * x;
        if !(den > 0.0) {
            return None;
        }
        let shape = self.params.cir_shape();
        let val = self.ve * x / den - shape * den.ln();
        let der = self.ve / (den * den) + 2.0 * self.beta * shape / den;
        Some((val, der))
    }

    /// (Lambda(w), Lambda'(w)) unscaled.
    fn eval(&self, w: f64) -> Option<(f64, f64)> {
        let ab = ab_real(w, self.tau, &self.params)?;
        let (l, dl) = self.lv(ab.b)?;
        Some((ab.a + l, ab.da + dl * ab.db))
    }

    /// a * Lambda(u / a).
    pub fn value(&self, u: f64, scale: f64) -> ExtendedReal {
        match self.eval(u / scale) {
            Some((v, _)) => ExtendedReal::Finite(scale * v),
            None => ExtendedReal::PosInfinity,
        }
    }

    /// d/du of a * Lambda(u / a), None outside the domain.
    pub fn derivative(&self, u: f64, scale: f64) -> Option<f64> {
        self.eval(u / scale).map(|(_, d)| d)
    }

    /// B(u / a, tau), the variance loading that drives the V_t mgf.
    pub fn riccati_b(&self, u: f64, scale: f64) -> Option<f64> {
        ab_real(u / scale, self.tau, &self.params).map(|ab| ab.b)
    }

    /// Lambda(z) for complex z with Re z inside the domain.
    pub fn complex(&self, z: Complex64) -> Result<Complex64> {
        if !(z.re > self.lo && z.re < self.hi) {
            return Err(Error::Domain(format!("Re z = {} outside ({}, {})", z.re, self.lo, self.hi)));
        }
        let (a, b) = ab_functions(z, self.tau, &self.params)?;
        let den = 1.0 - 2.0 * self.beta * b;
        if !(den.re > 0.0) {
            return Err(Error::Domain(format!("variance mgf not finite at z = {z}")));
        }
        Ok(a + self.ve * b / den - self.params.cir_shape() * den.ln())
    }

    /// a * Lambda(z / a).
    pub fn complex_scaled(&self, z: Complex64, scale: f64) -> Result<Complex64> {
        Ok(scale * self.complex(z / scale)?)
    }

    /// Root of Lambda'(w) = slope on the unscaled axis.
    fn solve_slope(&self, slope: f64) -> Result<f64> {
        let f = |w: f64| match self.derivative(w, 1.0) {
            Some(d) => d - slope,
            None => {
                if w > 0.0 {
                    f64::INFINITY
                } else {
                    f64::NEG_INFINITY
                }
            }
        };
        let f0 = f(0.0);
        if f0 == 0.0 {
            return Ok(0.0);
        }
        let edge = if f0 < 0.0 { self.hi } else { self.lo };
        let mut inner = 0.0;
        let mut f_inner = f0;
        let mut j = 1;
        loop {
            let w = edge * (1.0 - 0.5f64.powi(j));
            let fw = f(w);
            if fw.signum() != f0.signum() {
                return brent_with_values(f, inner, w, f_inner, fw, 1e-15 * w.abs(), 200);
            }
            inner = w;
            f_inner = fw;
            j += 1;
            if (edge - w).abs() < 1e-12 * edge.abs() {
                return Err(Error::Solver(format!("slope {slope} not reached inside the domain")));
            }
        }
    }
}

/// a * Lambda(u / a) for the forward log-price over `tenor` (k is ignored).
pub fn forward_lmgf(u: f64, tenor: &ForwardTenor, params: &HestonParams, scale: f64) -> Result<ExtendedReal> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {scale}")));
    }
    Ok(ForwardLmgf::new(params, tenor.t, tenor.tau)?.value(u, scale))
}

/// Saddlepoint u*_tau of the rescaled lmgf: d/du [sqrt(tau) Lambda(u / sqrt(tau))] = k.
pub fn saddlepoint(tenor: &ForwardTenor, params: &HestonParams) -> Result<f64> {
    tenor.validate()?;
    let lmgf = ForwardLmgf::new(params, tenor.t, tenor.tau)?;
    saddlepoint_with(&lmgf, tenor.k)
}

pub fn saddlepoint_with(lmgf: &ForwardLmgf, k: f64) -> Result<f64> {
    let w = lmgf.solve_slope(k)?;
    let a = lmgf.tau().sqrt();
    let resid = lmgf.derivative(w, 1.0).map(|d| d - k).unwrap_or(f64::INFINITY);
    if !(resid.abs() <= 1e-10 * k.abs().max(1.0)) {
        return Err(Error::Solver(format!("saddlepoint residual {resid} too large at k = {k}")));
    }
    Ok(a * w)
}

/// e_tau = (1 - 2 beta_t B(u*/sqrt(tau), tau)) tau^{-1/4}.
pub fn e_tau(tenor: &ForwardTenor, params: &HestonParams) -> Result<f64> {
    let lmgf = ForwardLmgf::new(params, tenor.t, tenor.tau)?;
    let u = saddlepoint_with(&lmgf, tenor.k)?;
    e_tau_at(&lmgf, u)
}

pub fn e_tau_at(lmgf: &ForwardLmgf, u_star: f64) -> Result<f64> {
    let a = lmgf.tau().sqrt();
    let b = lmgf
        .riccati_b(u_star, a)
        .ok_or_else(|| Error::Domain(format!("u* = {u_star} outside the domain")))?;
    Ok((1.0 - 2.0 * lmgf.beta() * b) * lmgf.tau().powf(-0.25))
}
