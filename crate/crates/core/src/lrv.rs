//! Long-run variance estimation around an estimated change point.
//!
//! Autocovariances are computed within each fitted segment around its own
//! mean; products that straddle the change point are left out. The Bartlett
//! estimator combines lags `0..=lambda` with triangular weights.

use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::numeric;

/// Window fraction used when no explicit window is given.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.1;

/// Relative floor applied to the estimate, as a multiple of `R(0)`.
pub const RELATIVE_FLOOR: f64 = 1e-8;
/// Absolute floor used when `R(0) = 0`.
pub const ABSOLUTE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LrvEstimate {
    /// Estimate after flooring; always positive.
    pub tau2: f64,
    /// Unfloored Bartlett sum.
    pub raw_tau2: f64,
    pub floored: bool,
    pub lambda: usize,
    /// `R(0..=lambda)`.
    pub autocovariances: Vec<f64>,
}

/// `max(1, floor(fraction * n))`, capped at the largest admissible window.
pub fn window_for(n: usize, fraction: f64) -> usize {
    let w = (fraction * n as f64).floor();
    let w = if w.is_finite() && w >= 1.0 { w as usize } else { 1 };
    w.min(n.saturating_sub(2)).max(1)
}

pub fn default_window(n: usize) -> usize {
    window_for(n, DEFAULT_WINDOW_FRACTION)
}

fn check_split(n: usize, m_hat: usize) -> Result<()> {
    if m_hat == 0 || m_hat >= n {
        return Err(Error::invalid(format!(
            "change point {m_hat} outside 1..={}",
            n - 1
        )));
    }
    Ok(())
}

fn segment_lag_sum(seg: &[f64], mean: f64, k: usize) -> f64 {
    if k >= seg.len() {
        return 0.0;
    }
    seg.iter()
        .zip(&seg[k..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum()
}

/// Lag-`k` autocovariance of the series with separate means on
/// `X(1..=m_hat)` and `X(m_hat+1..=n)`, normalised by `n`.
pub fn split_autocovariance(series: &TimeSeries, m_hat: usize, k: usize) -> Result<f64> {
    let n = series.len();
    check_split(n, m_hat)?;
    if k > n - 2 {
        return Err(Error::LagOutOfRange { lag: k, n });
    }
    let (left, right) = series.values().split_at(m_hat);
    Ok(split_autocovariance_unchecked(left, right, k))
}

fn split_autocovariance_unchecked(left: &[f64], right: &[f64], k: usize) -> f64 {
    let n = (left.len() + right.len()) as f64;
    let m1 = numeric::mean(left);
    let m2 = numeric::mean(right);
    (segment_lag_sum(left, m1, k) + segment_lag_sum(right, m2, k)) / n
}

/// Bartlett-window long-run variance `R(0) + 2 sum_{k=1}^{lambda} (1 - k/lambda) R(k)`.
pub fn bartlett_lrv(series: &TimeSeries, m_hat: usize, lambda: usize) -> Result<LrvEstimate> {
    let n = series.len();
    check_split(n, m_hat)?;
    let max = n - 2;
    if lambda < 1 || lambda > max {
        return Err(Error::WindowOutOfRange { lambda, max });
    }
    let (left, right) = series.values().split_at(m_hat);
    let m1 = numeric::mean(left);
    let m2 = numeric::mean(right);
    let nf = n as f64;
    let autocovariances: Vec<f64> = (0..=lambda)
        .map(|k| (segment_lag_sum(left, m1, k) + segment_lag_sum(right, m2, k)) / nf)
        .collect();
    let lf = lambda as f64;
    let tail: f64 = autocovariances[1..]
        .iter()
        .enumerate()
        .map(|(j, r)| (1.0 - (j + 1) as f64 / lf) * r)
        .sum();
    let raw_tau2 = autocovariances[0] + 2.0 * tail;
    let floor = if autocovariances[0] > 0.0 {
        RELATIVE_FLOOR * autocovariances[0]
    } else {
        ABSOLUTE_FLOOR
    };
    let floored = !(raw_tau2 >= floor);
    Ok(LrvEstimate {
        tau2: if floored { floor } else { raw_tau2 },
        raw_tau2,
        floored,
        lambda,
        autocovariances,
    })
}
