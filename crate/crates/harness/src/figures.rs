use std::fmt::Write as _;
use std::path::PathBuf;

use fwdsmile_core::asymptotics::smile_coefficients;
use fwdsmile_core::atm::atm_expansion;
use fwdsmile_core::fourier::{forward_smile, PriceFlag};
use fwdsmile_core::heston::ForwardLmgf;
use fwdsmile_core::{Error, ForwardTenor};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{fig3_params, Format, RunConfig};
use crate::HarnessError;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const CSV_HEADER: &str =
    "k,tau,exact_vol,asym_vol_0,asym_vol_1,asym_vol_2,asym_vol_3,abs_err_0,abs_err_1,abs_err_2,abs_err_3,flags";

/// Forward-start dates on the ATM figure.
pub const FIG3_T: [f64; 8] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 6] = [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5, Figure::Fig6];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }

    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown figure '{s}' (expected fig1..fig6)")))
    }

    pub fn default_config(self) -> RunConfig {
        let base = RunConfig::default();
        match self {
            Figure::Fig1 => RunConfig { tau_list: vec![1.0 / 24.0], ..base },
            Figure::Fig2 => RunConfig { tau_list: vec![1.0 / 12.0], ..base },
            Figure::Fig3 => RunConfig { params: fig3_params(), tau_list: vec![1.0 / 12.0], k_grid: vec![0.0], orders: vec![0, 1], ..base },
            Figure::Fig4 => RunConfig { tau_list: vec![1.0 / 100.0, 1.0 / 1000.0], ..base },
            Figure::Fig5 => RunConfig { t: 1.0 / 12.0, tau_list: vec![1.0 / 1000.0], ..base },
            Figure::Fig6 => RunConfig {
                params: fig3_params(),
                tau_list: vec![1.0, 0.5, 1.0 / 12.0, 1.0 / 50.0],
                k_grid: (-125..=125).map(|i| i as f64 / 20.0).collect(),
                orders: vec![],
                ..base
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub k: f64,
    pub tau: f64,
    pub t: f64,
    pub exact_vol: Option<f64>,
    pub asym_vol: [Option<f64>; 4],
    pub abs_err: [Option<f64>; 4],
    pub flags: Vec<String>,
}

impl ErrorRow {
    fn new(k: f64, tau: f64, t: f64) -> Self {
        ErrorRow { k, tau, t, exact_vol: None, asym_vol: [None; 4], abs_err: [None; 4], flags: vec![] }
    }

    fn fill_errors(&mut self) {
        if let Some(ex) = self.exact_vol {
            for i in 0..4 {
                self.abs_err[i] = self.asym_vol[i].map(|a| (a - ex).abs());
            }
        }
    }
}

fn flag_name(f: PriceFlag) -> &'static str {
    match f {
        PriceFlag::TruncationDominated => "TRUNCATION_DOMINATED",
        PriceFlag::NearIntrinsic => "NEAR_INTRINSIC",
    }
}

fn exact_point(row: &mut ErrorRow, cfg: &RunConfig) {
    let res = ForwardTenor::new(row.t, row.tau, row.k).and_then(|tn| forward_smile(&tn, &cfg.params, &cfg.quadrature));
    match res {
        Ok(s) => {
            row.exact_vol = Some(s.vol);
            row.flags.extend(s.price.flags.iter().map(|f| flag_name(*f).to_string()));
        }
        Err(_) => row.flags.push("PRICING_FAILED".into()),
    }
}

fn otm_row(k: f64, tau: f64, cfg: &RunConfig) -> ErrorRow {
    let mut row = ErrorRow::new(k, tau, cfg.t);
    exact_point(&mut row, cfg);
    match smile_coefficients(k, cfg.t, &cfg.params) {
        Ok(sc) => {
            for &o in &cfg.orders {
                match sc.vol(tau, o) {
                    Ok(v) => row.asym_vol[o as usize] = Some(v),
                    Err(Error::OrderUnavailable { .. }) => row.flags.push(format!("ORDER_{o}_GATED")),
                    Err(_) => row.flags.push(format!("ORDER_{o}_FAILED")),
                }
            }
        }
        Err(Error::Domain(_)) => row.flags.push("ATM_BAND".into()),
        Err(_) => row.flags.push("ASYMPTOTICS_FAILED".into()),
    }
    row.fill_errors();
    row
}

fn atm_row(t: f64, tau: f64, cfg: &RunConfig) -> ErrorRow {
    let mut row = ErrorRow::new(0.0, tau, t);
    exact_point(&mut row, cfg);
    match atm_expansion(t, &cfg.params) {
        Ok(e) => {
            for &o in &cfg.orders {
                match (o, e.sigma1) {
                    (0, _) => row.asym_vol[0] = Some(e.sigma0),
                    (1, Some(s1)) => row.asym_vol[1] = Some(e.sigma0 + s1 * tau),
                    _ => row.flags.push(format!("ORDER_{o}_GATED")),
                }
            }
        }
        Err(_) => row.flags.push("ASYMPTOTICS_FAILED".into()),
    }
    row.fill_errors();
    row
}

fn sorted_pairs(cfg: &RunConfig) -> Vec<(f64, f64)> {
    let mut taus = cfg.tau_list.clone();
    taus.sort_by(f64::total_cmp);
    let mut ks = cfg.k_grid.clone();
    ks.sort_by(f64::total_cmp);
    taus.iter().flat_map(|&tau| ks.iter().map(move |&k| (tau, k))).collect()
}

/// Exact and asymptotic smile on the (tau, k) grid, ordered by tau then k.
pub fn smile_rows(cfg: &RunConfig) -> Vec<ErrorRow> {
    sorted_pairs(cfg).par_iter().map(|&(tau, k)| otm_row(k, tau, cfg)).collect()
}

/// ATM vol against the forward-start date.
pub fn atm_rows(cfg: &RunConfig, t_grid: &[f64]) -> Vec<ErrorRow> {
    let tau = cfg.tau_list[0];
    t_grid.par_iter().map(|&t| atm_row(t, tau, cfg)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRow {
    pub tau: f64,
    pub u: f64,
    pub dlambda: Option<f64>,
}

/// Derivative of the rescaled forward lmgf on the u-grid (k_grid), one curve per tau.
pub fn slope_rows(cfg: &RunConfig) -> Result<Vec<SlopeRow>, HarnessError> {
    let mut out = vec![];
    for &tau in &cfg.tau_list {
        let f = ForwardLmgf::new(&cfg.params, cfg.t, tau).map_err(HarnessError::Numeric)?;
        let a = tau.sqrt();
        out.extend(cfg.k_grid.iter().map(|&u| SlopeRow { tau, u, dlambda: f.derivative(u, a) }));
    }
    Ok(out)
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn rows_csv(rows: &[ErrorRow], settings_hash: &str) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push_str(",t,engine_version,settings_hash\n");
    for r in rows {
        let mut fields = vec![num(r.k), num(r.tau), opt(r.exact_vol)];
        fields.extend(r.asym_vol.iter().map(|v| opt(*v)));
        fields.extend(r.abs_err.iter().map(|v| opt(*v)));
        fields.push(r.flags.join(";"));
        fields.push(num(r.t));
        fields.push(ENGINE_VERSION.to_string());
        fields.push(settings_hash.to_string());
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

pub fn slope_csv(rows: &[SlopeRow], settings_hash: &str) -> String {
    let mut s = String::from("tau,u,dlambda,engine_version,settings_hash\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{ENGINE_VERSION},{settings_hash}", num(r.tau), num(r.u), opt(r.dlambda));
    }
    s
}

fn series(points: impl Iterator<Item = (f64, Option<f64>)>) -> String {
    let mut s = String::new();
    for (x, y) in points {
        if let Some(y) = y {
            let _ = writeln!(s, "{} {}", num(x), num(y));
        }
    }
    s
}

fn plot_files(fig: Figure, rows: &[ErrorRow], taus: &[f64]) -> Vec<(String, String)> {
    let name = fig.name();
    let mut out = vec![];
    if fig == Figure::Fig3 {
        out.push((format!("{name}_exact.dat"), series(rows.iter().map(|r| (r.t, r.exact_vol)))));
        for o in 0..4 {
            if rows.iter().any(|r| r.asym_vol[o].is_some()) {
                out.push((format!("{name}_order{o}.dat"), series(rows.iter().map(|r| (r.t, r.asym_vol[o])))));
            }
        }
        return out;
    }
    for (i, &tau) in taus.iter().enumerate() {
        let sel: Vec<&ErrorRow> = rows.iter().filter(|r| r.tau == tau).collect();
        out.push((format!("{name}_tau{i}_exact.dat"), series(sel.iter().map(|r| (r.k, r.exact_vol)))));
        for o in 0..4 {
            if sel.iter().any(|r| r.asym_vol[o].is_some()) {
                out.push((format!("{name}_tau{i}_order{o}.dat"), series(sel.iter().map(|r| (r.k, r.asym_vol[o])))));
                out.push((format!("{name}_tau{i}_err{o}.dat"), series(sel.iter().map(|r| (r.k, r.abs_err[o])))));
            }
        }
    }
    out
}

fn sorted_taus(cfg: &RunConfig) -> Vec<f64> {
    let mut taus = cfg.tau_list.clone();
    taus.sort_by(f64::total_cmp);
    taus.dedup();
    taus
}

/// Generated file contents keyed by file name.
pub fn render_figure(fig: Figure, cfg: &RunConfig) -> Result<Vec<(String, String)>, HarnessError> {
    cfg.validate()?;
    let hash = cfg.settings_hash();
    let mut files = vec![];
    if fig == Figure::Fig6 {
        let rows = slope_rows(cfg)?;
        if cfg.formats.contains(&Format::Csv) {
            files.push(("fig6.csv".to_string(), slope_csv(&rows, &hash)));
        }
        if cfg.formats.contains(&Format::Plotdata) {
            for (i, &tau) in cfg.tau_list.iter().enumerate() {
                let s = series(rows.iter().filter(|r| r.tau == tau).map(|r| (r.u, r.dlambda)));
                files.push((format!("fig6_tau{i}.dat"), s));
            }
        }
        return Ok(files);
    }
    let rows = if fig == Figure::Fig3 { atm_rows(cfg, &FIG3_T) } else { smile_rows(cfg) };
    if cfg.formats.contains(&Format::Csv) {
        files.push((format!("{}.csv", fig.name()), rows_csv(&rows, &hash)));
    }
    if cfg.formats.contains(&Format::Plotdata) {
        files.extend(plot_files(fig, &rows, &sorted_taus(cfg)));
    }
    Ok(files)
}

/// Build the figure config from defaults plus overrides, render, and write to disk.
pub fn run_figure(fig: Figure, overrides: &[String], out: Option<PathBuf>) -> Result<Vec<PathBuf>, HarnessError> {
    let mut cfg = fig.default_config();
    for o in overrides {
        cfg.apply_override(o)?;
    }
    if let Some(dir) = out {
        cfg.outputs = dir;
    }
    let files = render_figure(fig, &cfg)?;
    std::fs::create_dir_all(&cfg.outputs).map_err(|e| HarnessError::Io(format!("{}: {e}", cfg.outputs.display())))?;
    let mut written = vec![];
    for (name, body) in files {
        let path = cfg.outputs.join(name);
        std::fs::write(&path, body).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        written.push(path);
    }
    Ok(written)
}
