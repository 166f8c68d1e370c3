//! Forward-start options under Heston: Fourier prices and small-maturity
//! forward smile expansions.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod asymptotics;
pub mod atm;
pub mod bsm;
pub mod error;
pub mod fourier;
pub mod heston;
pub mod params;
pub mod quadrature;
pub mod roots;
pub mod special;

pub use error::{Error, Result};
pub use params::{ExtendedReal, ForwardTenor, HestonParams};
