//! Utility maximization under convex incentive schemes: concavification of the
//! composed utility, convex duality, closed-form Black-Scholes solutions,
//! one-period finite markets and Monte Carlo diagnostics for incomplete models.

// Negated comparisons such as `!(x > 0.0)` are used on purpose so that NaN
// inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod bs;
pub mod cli;
pub mod discrete;
pub mod error;
pub mod mc;
pub mod models;
pub mod numeric;
pub mod utility;

pub use error::{Error, Result};
