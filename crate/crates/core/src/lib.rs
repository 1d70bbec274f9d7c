//! Stochastic optimization lab.
//!
//! Online (stochastic approximation) and offline (sample average
//! approximation) solvers over synthetic problems whose population optimum is
//! known exactly, plus a harness that measures convergence rates and
//! sample complexities `N(ε, β)` empirically.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod problems;
pub mod sa;
pub mod saa;
pub mod sliding;

pub use error::{Error, Result};
