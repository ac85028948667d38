//! Alternating maximum-likelihood estimation of 1PL/2PL/3PL item response
//! models, with coreset subsampling of examinees for the item step.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod coreset;
mod error;
pub mod harness;
pub mod io;
pub mod leverage;
pub mod model;
pub mod mu;
pub mod numeric;
pub mod solver;
pub mod synth;

pub use error::{IrtError, Result};
