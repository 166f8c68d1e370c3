use std::path::{Path, PathBuf};

use fwdsmile_core::fourier::QuadratureSettings;
use fwdsmile_core::HestonParams;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Plotdata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: HestonParams,
    pub t: f64,
    pub tau_list: Vec<f64>,
    pub k_grid: Vec<f64>,
    pub orders: Vec<u8>,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    pub outputs: PathBuf,
    pub formats: Vec<Format>,
}

pub fn default_params() -> HestonParams {
    HestonParams::new(1.0, 0.07, 0.52, -0.8, 0.07).expect("default parameters are valid")
}

pub fn fig3_params() -> HestonParams {
    HestonParams::new(1.0, 0.07, 0.4, -0.6, 0.07).expect("figure parameters are valid")
}

/// 41 points on [-0.4, 0.4], minus the band |k| < 1e-3.
pub fn default_k_grid() -> Vec<f64> {
    (-20..=20).map(|i| i as f64 / 50.0).filter(|k: &f64| k.abs() >= 1e-3).collect()
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: default_params(),
            t: 1.0,
            tau_list: vec![1e-2, 1e-3, 1e-4],
            k_grid: default_k_grid(),
            orders: vec![0, 1, 2, 3],
            quadrature: QuadratureSettings::default(),
            outputs: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Plotdata],
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

fn parse_f64(key: &str, val: &str) -> Result<f64, HarnessError> {
    val.trim().parse::<f64>().map_err(|_| cfg_err(format!("{key}: cannot parse '{val}' as a number")))
}

fn parse_list<T, F: Fn(&str) -> Result<T, HarnessError>>(val: &str, f: F) -> Result<Vec<T>, HarnessError> {
    val.split(',').filter(|s| !s.trim().is_empty()).map(|s| f(s.trim())).collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| cfg_err(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(cfg_err(format!("t must be > 0, got {}", self.t)));
        }
        if self.tau_list.is_empty() {
            return Err(cfg_err("tau_list is empty"));
        }
        if let Some(tau) = self.tau_list.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(cfg_err(format!("tau_list entries must be > 0, got {tau}")));
        }
        if self.k_grid.is_empty() {
            return Err(cfg_err("k_grid is empty"));
        }
        if self.k_grid.iter().any(|k| !k.is_finite()) {
            return Err(cfg_err("k_grid entries must be finite"));
        }
        if self.orders.iter().any(|&o| o > 3) {
            return Err(cfg_err("orders must be a subset of {0,1,2,3}"));
        }
        self.quadrature.validate().map_err(|e| cfg_err(e.to_string()))?;
        Ok(())
    }

    /// Apply one `key=val` override. Lists are comma separated.
    pub fn apply_override(&mut self, item: &str) -> Result<(), HarnessError> {
        let (key, val) = item.split_once('=').ok_or_else(|| cfg_err(format!("override '{item}' is not key=val")))?;
        let key = key.trim();
        let p = self.params;
        let mut params = |kappa, theta, xi, rho, v| -> Result<(), HarnessError> {
            self.params = HestonParams::new(kappa, theta, xi, rho, v).map_err(|e| cfg_err(e.to_string()))?;
            Ok(())
        };
        match key {
            "kappa" => params(parse_f64(key, val)?, p.theta(), p.xi(), p.rho(), p.v())?,
            "theta" => params(p.kappa(), parse_f64(key, val)?, p.xi(), p.rho(), p.v())?,
            "xi" => params(p.kappa(), p.theta(), parse_f64(key, val)?, p.rho(), p.v())?,
            "rho" => params(p.kappa(), p.theta(), p.xi(), parse_f64(key, val)?, p.v())?,
            "v" | "v0" => params(p.kappa(), p.theta(), p.xi(), p.rho(), parse_f64(key, val)?)?,
            "t" => self.t = parse_f64(key, val)?,
            "tau_list" => self.tau_list = parse_list(val, |s| parse_f64(key, s))?,
            "k_grid" => self.k_grid = parse_list(val, |s| parse_f64(key, s))?,
            "orders" => {
                self.orders = parse_list(val, |s| s.parse::<u8>().map_err(|_| cfg_err(format!("orders: bad entry '{s}'"))))?
            }
            "outputs" => self.outputs = PathBuf::from(val),
            "formats" => {
                self.formats = parse_list(val, |s| match s {
                    "csv" => Ok(Format::Csv),
                    "plotdata" => Ok(Format::Plotdata),
                    _ => Err(cfg_err(format!("formats: unknown '{s}'"))),
                })?
            }
            "abs_tol" => self.quadrature.abs_tol = parse_f64(key, val)?,
            "rel_tol" => self.quadrature.rel_tol = parse_f64(key, val)?,
            "damping" => self.quadrature.damping = Some(parse_f64(key, val)?),
            "truncation" => self.quadrature.truncation = Some(parse_f64(key, val)?),
            "max_subdivisions" => {
                self.quadrature.max_subdivisions =
                    val.trim().parse().map_err(|_| cfg_err(format!("max_subdivisions: bad value '{val}'")))?
            }
            _ => return Err(cfg_err(format!("unknown override key '{key}'"))),
        }
        Ok(())
    }

    /// Hex digest of the pricing inputs, carried on every output row.
    pub fn settings_hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let canon = serde_json::json!({
            "params": self.params,
            "t": self.t,
            "quadrature": self.quadrature,
        });
        let digest = Sha256::digest(canon.to_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
