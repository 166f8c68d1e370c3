use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fwdsmile::config::RunConfig;
use fwdsmile::diag::{run_diagnostics, write_report};
use fwdsmile::figures::{run_figure, Figure};
use fwdsmile::HarnessError;
use fwdsmile_core::asymptotics::smile_coefficients;
use fwdsmile_core::atm::atm_expansion;
use fwdsmile_core::fourier::{forward_call, forward_smile, QuadratureSettings};
use fwdsmile_core::{ForwardTenor, HestonParams};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fwdsmile", version, about = "Heston forward-start prices and small-maturity forward smile")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 0.07)]
    theta: f64,
    #[arg(long, default_value_t = 0.52)]
    xi: f64,
    #[arg(long, default_value_t = -0.8, allow_hyphen_values = true)]
    rho: f64,
    #[arg(long = "v0", default_value_t = 0.07)]
    v0: f64,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long)]
    tau: f64,
}

#[derive(Args, Clone)]
struct QuadArgs {
    /// Fourier damping; chosen automatically when absent
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Absolute and relative quadrature tolerance
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Forward-start call price by Fourier inversion
    Price {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Asymptotic forward implied vol at a given order, next to the exact one
    Smile {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, allow_hyphen_values = true)]
        k: f64,
        #[arg(long, default_value_t = 1)]
        order: u8,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// At-the-money forward vol expansion
    Atm {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        quad: QuadArgs,
    },
    /// Write the data behind one figure
    Figure {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long = "override", value_name = "KEY=VAL")]
        overrides: Vec<String>,
    },
    /// Expansion residual and consistency checks
    Diag {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn params(m: &ModelArgs) -> Result<HestonParams, HarnessError> {
    HestonParams::new(m.kappa, m.theta, m.xi, m.rho, m.v0).map_err(|e| HarnessError::Config(e.to_string()))
}

fn tenor(m: &ModelArgs, k: f64) -> Result<ForwardTenor, HarnessError> {
    ForwardTenor::new(m.t, m.tau, k).map_err(|e| HarnessError::Config(e.to_string()))
}

fn settings(q: &QuadArgs) -> Result<QuadratureSettings, HarnessError> {
    let mut s = QuadratureSettings { damping: q.alpha, ..Default::default() };
    if let Some(tol) = q.tol {
        s.abs_tol = tol;
        s.rel_tol = tol;
    }
    s.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
    Ok(s)
}

fn print(v: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&v).expect("json values serialise"));
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.cmd {
        Cmd::Price { model, k, quad } => {
            let p = params(&model)?;
            let r = forward_call(&tenor(&model, k)?, &p, &settings(&quad)?)?;
            print(json!(r));
        }
        Cmd::Smile { model, k, order, quad } => {
            let p = params(&model)?;
            let tn = tenor(&model, k)?;
            let sc = smile_coefficients(k, model.t, &p)?;
            let asym = sc.vol(model.tau, order)?;
            let exact = forward_smile(&tn, &p, &settings(&quad)?)?;
            print(json!({
                "k": k, "tau": model.tau, "t": model.t, "order": order,
                "asym_vol": asym, "exact_vol": exact.vol, "low_confidence": exact.low_confidence,
                "coefficients": sc,
            }));
        }
        Cmd::Atm { model, quad } => {
            let p = params(&model)?;
            let e = atm_expansion(model.t, &p)?;
            let exact = forward_smile(&tenor(&model, 0.0)?, &p, &settings(&quad)?)?;
            print(json!({
                "t": model.t, "tau": model.tau, "sigma0": e.sigma0, "sigma1": e.sigma1, "regime": e.regime,
                "asym_vol": e.vol(model.tau), "exact_vol": exact.vol,
            }));
        }
        Cmd::Figure { name, out, overrides } => {
            let fig = Figure::parse(&name)?;
            for path in run_figure(fig, &overrides, out)? {
                println!("{}", path.display());
            }
        }
        Cmd::Diag { config, out } => {
            let mut cfg = match config {
                Some(path) => RunConfig::from_file(&path)?,
                None => RunConfig::default(),
            };
            if let Some(dir) = out {
                cfg.outputs = dir;
            }
            let report = run_diagnostics(&cfg)?;
            let path = write_report(&cfg, &report)?;
            for c in &report.checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("{}", path.display());
            if !report.passed {
                return Ok(3);
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("fwdsmile: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
