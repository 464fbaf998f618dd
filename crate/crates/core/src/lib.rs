//! Simulation and verification toolkit for empirical risk minimization on
//! heavy-tailed, exponentially beta-mixing data.
//!
//! The crate is organized by concern:
//!
//! - [`dgp`]: stationary dependent processes (sub-Weibull AR, semi-Pareto AR,
//!   Gaussian AR) and their heavy-tailed samplers.
//! - [`erm`]: l1-ball constrained ERM for squared and Huber loss.
//! - [`complexity`]: Monte-Carlo estimators of small-ball probability,
//!   blocked local Rademacher complexity and localized Gaussian width, plus the
//!   closed-form theoretical bounds for the linear l1 class.
//! - [`concentration`]: explicit tail bounds for sums of dependent variables,
//!   the blocking partition, the variance proxy and an empirical domination
//!   harness.
//! - [`risk`]: stationary covariances and the L2(pi) parameter error.
//! - [`experiments`]: rate-scaling studies, config files, CSV output and plots.

// `!(x > 0.0)` deliberately rejects NaN alongside non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complexity;
pub mod concentration;
pub mod dgp;
pub mod erm;
mod error;
pub mod experiments;
pub mod risk;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
