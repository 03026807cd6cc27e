//! Change-point estimation for at-most-one-change (AMOC) mean-shift series
//! with dependent errors, and confidence intervals for the change point from
//! two routes: the argmax limit law of a drifted two-sided Wiener process,
//! and a circular block bootstrap of the centred residuals.
//!
//! ```
//! use amoc_ci::{fit_amoc, TimeSeries};
//!
//! let x = TimeSeries::new(vec![0.0, 0.1, -0.1, 2.0, 2.1, 1.9]).unwrap();
//! let fit = fit_amoc(&x, 0.5).unwrap();
//! assert_eq!(fit.m_hat, 3);
//! ```

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bootstrap;
pub mod cli;
pub mod cusum;
pub mod error;
pub mod io;
pub mod limitdist;
pub mod lrv;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod study;

pub use bootstrap::{
    bootstrap_ci, bootstrap_distribution, BlockScheme, BootstrapConfig, BootstrapDistribution,
    CiMethod, ConfidenceInterval,
};
pub use cusum::{compute_cusum, estimate_changepoint, fit_amoc, ChangePointFit, CusumStatistics};
pub use error::{Error, Result};
pub use limitdist::{
    asymptotic_ci, drift_slope, simulate_argmax_samples, GridMode, LimitLawConfig, LimitSamples,
    Side,
};
pub use lrv::{bartlett_lrv, split_autocovariance, LrvEstimate};
pub use model::{ar1_generate, make_amoc_series, Ar1Params, AmocSpec, TimeSeries};
