//! Weighted CUSUM statistics and the single change-point fit.
//!
//! `S_gamma(k) = (n / (k (n - k)))^gamma * sum_{i<=k} (X(i) - mean(X))` for
//! `k = 1..n-1`. The change point estimate is the smallest `k` maximizing
//! `|S_gamma(k)|`.

use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::numeric::{self, DoubleDouble};

/// Validates the CUSUM weight exponent.
pub fn check_gamma(gamma: f64) -> Result<()> {
    if (0.0..=0.5).contains(&gamma) {
        Ok(())
    } else {
        Err(Error::GammaOutOfRange(gamma))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CusumStatistics {
    gamma: f64,
    /// `values[k - 1] = S_gamma(k)`.
    values: Vec<f64>,
}

impl CusumStatistics {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Statistics for `k = 1..n-1`, stored at positions `0..n-2`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Length of the underlying series.
    pub fn series_len(&self) -> usize {
        self.values.len() + 1
    }

    /// `S_gamma(k)` for 1-based `k`.
    pub fn at(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|j| self.values.get(j).copied())
    }
}

#[inline]
fn weight(n: usize, k: usize, gamma: f64) -> f64 {
    if gamma == 0.0 {
        return 1.0;
    }
    let nf = n as f64;
    let kf = k as f64;
    let base = nf / (kf * (nf - kf));
    if gamma == 0.5 {
        base.sqrt()
    } else {
        base.powf(gamma)
    }
}

/// Computes `S_gamma(1..n-1)` with one pass of double-double partial sums.
pub fn compute_cusum(series: &TimeSeries, gamma: f64) -> Result<CusumStatistics> {
    check_gamma(gamma)?;
    let x = series.values();
    let n = x.len();
    let mean = numeric::sum_dd(x).div_f64(n as f64);
    let mut acc = DoubleDouble::ZERO;
    let values = x[..n - 1]
        .iter()
        .enumerate()
        .map(|(j, &xi)| {
            acc = acc.add_f64(xi).sub(mean);
            weight(n, j + 1, gamma) * acc.value()
        })
        .collect();
    Ok(CusumStatistics { gamma, values })
}

/// Smallest 1-based `k` attaining `max |S_gamma(k)|`.
pub fn estimate_changepoint(stats: &CusumStatistics) -> usize {
    argmax_abs(&stats.values)
}

pub(crate) fn argmax_abs(values: &[f64]) -> usize {
    let mut best = 0usize;
    let mut best_abs = f64::NEG_INFINITY;
    for (j, v) in values.iter().enumerate() {
        let a = v.abs();
        if a > best_abs {
            best_abs = a;
            best = j;
        }
    }
    best + 1
}

/// Change-point fit: estimate, segment means, shift, and residuals.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangePointFit {
    pub gamma: f64,
    /// 1-based change-point estimate in `1..n-1`.
    pub m_hat: usize,
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    /// Always exactly `mu2_hat - mu1_hat`.
    pub d_hat: f64,
    /// `X(i) - mu1_hat [i <= m_hat] - mu2_hat [i > m_hat]`.
    pub residuals: Vec<f64>,
    /// `residuals` minus their mean.
    pub residuals_centered: Vec<f64>,
}

impl ChangePointFit {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }

    /// Fitted level at 1-based position `i`.
    pub fn level(&self, i: usize) -> f64 {
        if i <= self.m_hat {
            self.mu1_hat
        } else {
            self.mu2_hat
        }
    }

    /// Relative change location `m_hat / n`.
    pub fn theta_hat(&self) -> f64 {
        self.m_hat as f64 / self.n() as f64
    }
}

pub fn fit_amoc(series: &TimeSeries, gamma: f64) -> Result<ChangePointFit> {
    let stats = compute_cusum(series, gamma)?;
    let m_hat = estimate_changepoint(&stats);
    let x = series.values();
    let mu1_hat = numeric::mean(&x[..m_hat]);
    let mu2_hat = numeric::mean(&x[m_hat..]);
    let residuals: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, &xi)| xi - if j < m_hat { mu1_hat } else { mu2_hat })
        .collect();
    let shift = numeric::mean(&residuals);
    let residuals_centered = residuals.iter().map(|e| e - shift).collect();
    Ok(ChangePointFit {
        gamma,
        m_hat,
        mu1_hat,
        mu2_hat,
        d_hat: mu2_hat - mu1_hat,
        residuals,
        residuals_centered,
    })
}
