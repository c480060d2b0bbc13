//! Delegated search mechanisms and the stopping rules behind them.
//!
//! The crate builds single-proposal mechanisms for a principal who delegates
//! search to a self-interested agent, the prophet-inequality stopping rules
//! they are equivalent to, and the machinery to certify their approximation
//! factors numerically:
//!
//! * [`numerics`]: quadrature, monotone root finding, the `z(s)` curve behind
//!   the oblivious 0.745 rule and executable checks of its supporting lemmas.
//! * [`distributions`]: atom/uniform-segment mixtures with exact CDF, quantile
//!   and `E[max]`, joint laws for `(x, y)` and the tightness instances.
//! * [`prophet`]: threshold, region and ODE-driven stopping rules with exact
//!   and Monte Carlo evaluation.
//! * [`delegation`]: single-proposal mechanisms, agent best response, the
//!   reduction from general mechanisms, and the stopping-rule bridge.
//! * [`boxsearch`]: the binary model (Weitzman priorities, covered calls,
//!   threshold mechanisms `M(X)`).
//! * [`budgeted`]: the inspection-budgeted binary model.
//! * [`harness`]: experiment configs, CSV reports and the full verification
//!   suite driven by the `delegation-lab` CLI.
//!
//! Monte Carlo work fans out over [`rayon`] when the `parallel` feature is
//! enabled (the default); results are identical either way because every
//! trial owns a generator derived from `(seed, stream, trial)` and sums are
//! accumulated in trial order.

// Domain checks are written `!(x >= 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boxsearch;
pub mod budgeted;
pub mod delegation;
pub mod distributions;
mod error;
pub mod harness;
pub mod numerics;
pub mod parallel;
pub mod prophet;
pub mod rng;

pub use error::{Error, Result};

/// `1 - 1/e`.
pub const ONE_MINUS_INV_E: f64 = 1.0 - 1.0 / std::f64::consts::E;
