//! Figure data, diagnostics and CLI plumbing on top of `fwdsmile-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diag;
pub mod figures;

pub use config::{Format, RunConfig};
pub use diag::{run_diagnostics, run_diagnostics_with, DiagReport, Fault};
pub use figures::{render_figure, run_figure, ErrorRow, Figure};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(#[from] fwdsmile_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 1,
            HarnessError::Numeric(_) => 2,
        }
    }
}
