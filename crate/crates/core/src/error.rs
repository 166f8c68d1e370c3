use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("branch tracking failed: {0}")]
    Branch(String),
    #[error("root finder failed: {0}")]
    Solver(String),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
    #[error("order {requested} requested but only up to {max} is available for these parameters")]
    OrderUnavailable { requested: u8, max: u8 },
}

pub type Result<T> = std::result::Result<T, Error>;
