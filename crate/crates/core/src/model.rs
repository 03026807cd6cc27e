//! Series and the at-most-one-change data-generating process.
//!
//! Observations are stored 0-based, but every index exposed through this
//! crate's domain types (change points, `AmocSpec::m`) is 1-based: a change
//! at `m` means observations `1..=m` sit at the baseline level.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Smallest admissible series length.
pub const MIN_LEN: usize = 3;

/// Ordered, finite observations `X(1..n)` with `n >= 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < MIN_LEN {
            return Err(Error::SeriesTooShort {
                len: values.len(),
                min: MIN_LEN,
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { position: pos + 1 });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Observation `X(i)` for 1-based `i`.
    pub fn get(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|j| self.values.get(j).copied())
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Largest absolute observation, at least 1. Used to scale tolerances.
    pub fn scale(&self) -> f64 {
        self.values.iter().fold(1.0_f64, |acc, v| acc.max(v.abs()))
    }
}

/// Parameters of `X(i) = mu + d * [i > m] + e(i)`, `i = 1..n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmocSpec {
    pub n: usize,
    pub m: usize,
    pub mu: f64,
    pub d: f64,
}

impl AmocSpec {
    pub fn new(n: usize, m: usize, mu: f64, d: f64) -> Result<Self> {
        let spec = Self { n, m, mu, d };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_LEN {
            return Err(Error::SeriesTooShort {
                len: self.n,
                min: MIN_LEN,
            });
        }
        if self.m < 1 || self.m >= self.n {
            return Err(Error::invalid(format!(
                "change index m={} must satisfy 1 <= m <= n-1 = {}",
                self.m,
                self.n - 1
            )));
        }
        if !self.mu.is_finite() || !self.d.is_finite() {
            return Err(Error::invalid("mu and d must be finite"));
        }
        Ok(())
    }

    /// Relative change location `m / n`.
    pub fn theta(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// Stationary AR(1) errors `e(i) = rho * e(i-1) + eps(i)`, `eps ~ N(0, sd^2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ar1Params {
    pub rho: f64,
    pub innovation_sd: f64,
}

impl Ar1Params {
    pub fn new(rho: f64, innovation_sd: f64) -> Result<Self> {
        let p = Self { rho, innovation_sd };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.abs() < 1.0) {
            return Err(Error::invalid(format!(
                "AR(1) coefficient must satisfy |rho| < 1, got {}",
                self.rho
            )));
        }
        if !(self.innovation_sd > 0.0 && self.innovation_sd.is_finite()) {
            return Err(Error::invalid(format!(
                "innovation standard deviation must be positive, got {}",
                self.innovation_sd
            )));
        }
        Ok(())
    }

    /// Marginal variance `sd^2 / (1 - rho^2)`.
    pub fn stationary_variance(&self) -> f64 {
        self.innovation_sd * self.innovation_sd / (1.0 - self.rho * self.rho)
    }

    /// Long-run variance `sd^2 / (1 - rho)^2`.
    pub fn long_run_variance(&self) -> f64 {
        let s = self.innovation_sd / (1.0 - self.rho);
        s * s
    }
}

/// Draws `e(1..n)` from the stationary AR(1) process. The initial value is
/// drawn from the stationary law, so there is no burn-in.
pub fn ar1_generate<R: Rng + ?Sized>(params: &Ar1Params, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::invalid("AR(1) length must be at least 1"));
    }
    let sd = params.innovation_sd;
    let mut out = Vec::with_capacity(n);
    let z: f64 = StandardNormal.sample(rng);
    let mut prev = z * params.stationary_variance().sqrt();
    out.push(prev);
    for _ in 1..n {
        let eps: f64 = StandardNormal.sample(rng);
        prev = params.rho * prev + sd * eps;
        out.push(prev);
    }
    Ok(out)
}

/// Builds `X(i) = mu + d * [i > m] + e(i)`.
pub fn make_amoc_series(spec: &AmocSpec, errors: &[f64]) -> Result<TimeSeries> {
    spec.validate()?;
    if errors.len() != spec.n {
        return Err(Error::LengthMismatch {
            expected: spec.n,
            actual: errors.len(),
        });
    }
    let values = errors
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let level = if j + 1 > spec.m { spec.mu + spec.d } else { spec.mu };
            level + e
        })
        .collect();
    TimeSeries::new(values)
}
