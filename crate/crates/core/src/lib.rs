//! Estimation and inference on extreme quantiles of a cross-sectional
//! distribution that is observed only through noisy unit-level estimates.
//!
//! Three families of intervals are provided, by how far into the tail the
//! target lies:
//!
//! * [`extreme`]: self-normalized ratio of top order statistics with
//!   subsampled or simulated critical values ([`limit_dist`]).
//! * [`intermediate`]: self-normalized intermediate order statistic with
//!   normal or subsampled critical values.
//! * [`central`]: binomial order-statistic intervals and a bias-corrected
//!   quantile with a bootstrap interval.
//!
//! [`ev_index`] estimates the extreme-value index, [`simulation`] holds the
//! Monte Carlo design used to study coverage.

pub mod central;
pub mod error;
pub mod ev_index;
pub mod extreme;
pub mod intermediate;
pub mod limit_dist;
pub mod rng;
pub mod sample;
pub mod simulation;
pub mod subsample;

pub use error::{Result, TailError};
pub use sample::{CiMethod, ConfidenceInterval, EstimateSample, Side, TailTarget};
pub use simulation::panel::estimate_sigma2_from_panel;

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
