//! Compensated summation and empirical-distribution helpers shared by the
//! estimators and the interval constructions.

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` carrying roughly twice the precision of `f64`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DoubleDouble {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[allow(clippy::should_implement_trait)]
impl DoubleDouble {
    pub const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    pub fn value(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add_f64(self, x: f64) -> Self {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        Self { hi, lo }
    }

    pub fn add(self, other: Self) -> Self {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Self { hi, lo }
    }

    pub fn neg(self) -> Self {
        Self {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn div_f64(self, d: f64) -> Self {
        let q1 = self.hi / d;
        // remainder self - q1*d, exact product via fma
        let p = q1 * d;
        let p_err = q1.mul_add(d, -p);
        let (r, r_err) = two_sum(self.hi, -p);
        let r = r + (r_err - p_err + self.lo);
        let q2 = r / d;
        let (hi, lo) = quick_two_sum(q1, q2);
        Self { hi, lo }
    }
}

/// Sum of `xs` in double-double precision.
pub fn sum_dd(xs: &[f64]) -> DoubleDouble {
    xs.iter()
        .fold(DoubleDouble::ZERO, |acc, &x| acc.add_f64(x))
}

/// Mean of a nonempty slice, computed with compensated summation.
pub fn mean(xs: &[f64]) -> f64 {
    debug_assert!(!xs.is_empty());
    sum_dd(xs).div_f64(xs.len() as f64).value()
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}

/// Empirical quantile of an ascending-sorted sample: the smallest sample
/// value `v` with `fraction(samples <= v) >= p`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> Result<f64> {
    check_probability(p)?;
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = sorted.len();
    let nf = n as f64;
    // Smallest count c in 1..=n with c/n >= p, evaluated in the same float
    // arithmetic the definition uses.
    let mut c = ((p * nf).ceil() as usize).clamp(1, n);
    while c > 1 && (c - 1) as f64 / nf >= p {
        c -= 1;
    }
    while c < n && (c as f64) / nf < p {
        c += 1;
    }
    Ok(sorted[c - 1])
}

/// Number of sorted samples `<= x`.
pub fn count_le(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v <= x)
}

/// Number of sorted samples `< x`.
pub fn count_lt(sorted: &[f64], x: f64) -> usize {
    sorted.partition_point(|&v| v < x)
}

/// Sorts a copy of the samples ascending. Panics on NaN.
pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("NaN in sample"));
    v
}
