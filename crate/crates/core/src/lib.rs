//! High-cost claimant prediction from administrative claims.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod claims;
pub mod economics;
pub mod error;
pub mod eval;
pub mod fairness;
pub mod features;
pub mod gbdt;
pub mod synthgen;

pub use error::{Error, Result};
