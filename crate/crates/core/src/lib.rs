//! Macroeconomic model of a proof-of-stake network whose stakers can also
//! invest in an external risky market.
//!
//! * [`poly`]: certified unique-positive-root solver for degree <= 4.
//! * [`homogeneous`]: the pure-investor economy, its scaling regimes and
//!   sensitivity to the external risk-adjusted return.
//! * [`heterogeneous`]: investors plus liquidity-seeking consumers.
//! * [`dynamics`]: the discrete-time wealth recursion and its diagnostics.
//! * [`analysis`]: sweeps, exponent fits and Monte Carlo ensembles.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod heterogeneous;
pub mod homogeneous;
pub mod poly;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
