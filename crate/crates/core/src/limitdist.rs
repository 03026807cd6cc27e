//! Monte Carlo law of `U = argmax_t { W(t) - |t| g(t) }`, where `W` is a
//! two-sided standard Wiener process and `g` is piecewise constant with one
//! slope for `t < 0` and another for `t >= 0`.
//!
//! Each replicate runs two independent Gaussian random walks outward from
//! `t = 0` (value 0), subtracts the drift, and records where the maximum
//! lands. Ties go to the location closest to 0, then to the negative side.
//!
//! The exact closed-form distribution is not used. A closed form exists in
//! the literature, but one published version carries a misprint in the
//! weight of its leading term (`c2/(c1+c2)` should replace `c1/(c1+c2)`),
//! so quantiles here come from simulation only.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{CiMethod, ConfidenceInterval};
use crate::cusum::check_gamma;
use crate::error::{Error, Result};
use crate::numeric::{self, check_probability};
use crate::rng::{derive_seed, substream, tag};

pub const DEFAULT_HALF_WIDTH: f64 = 200.0;
pub const DEFAULT_STEP: f64 = 0.05;
pub const DEFAULT_REPLICATES: usize = 200_000;
pub const MIN_REPLICATES: usize = 1000;

/// Largest tolerated fraction of replicates whose argmax is near the edge.
pub const MAX_BOUNDARY_HIT_FRACTION: f64 = 0.005;
/// Width of the edge zone, relative to the half-width.
pub const BOUNDARY_ZONE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Negative,
    NonNegative,
}

/// Drift slope `g(t)` on the given side of the origin.
pub fn drift_slope(theta: f64, gamma: f64, side: Side) -> Result<f64> {
    check_theta(theta)?;
    check_gamma(gamma)?;
    Ok(match side {
        Side::Negative => (1.0 - theta) * (1.0 - gamma) + theta * gamma,
        Side::NonNegative => (1.0 - theta) * gamma + theta * (1.0 - gamma),
    })
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "relative change location must lie in (0, 1), got {theta}"
        )))
    }
}

/// How the simulation grid is laid out on each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Both sides use `half_width` and `step` as given.
    Fixed,
    /// Side with slope `c` uses `half_width` and `step` multiplied by
    /// `(1/2 / c)^2`. Brownian scaling makes the relative resolution and the
    /// boundary-hit probability the same as the symmetric slope-1/2 case.
    /// Identical to `Fixed` when both slopes are 1/2.
    #[default]
    DriftScaled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitLawConfig {
    pub theta: f64,
    pub gamma: f64,
    pub half_width: f64,
    pub step: f64,
    pub replicates: usize,
    pub seed: u64,
    pub grid: GridMode,
}

impl LimitLawConfig {
    pub fn new(theta: f64, gamma: f64) -> Self {
        Self {
            theta,
            gamma,
            half_width: DEFAULT_HALF_WIDTH,
            step: DEFAULT_STEP,
            replicates: DEFAULT_REPLICATES,
            seed: 0,
            grid: GridMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_theta(self.theta)?;
        check_gamma(self.gamma)?;
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::invalid("half-width must be positive"));
        }
        if !(self.step > 0.0) || self.step > self.half_width / 100.0 {
            return Err(Error::invalid(format!(
                "step {} must be positive and at most half-width/100 = {}",
                self.step,
                self.half_width / 100.0
            )));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(Error::invalid(format!(
                "at least {MIN_REPLICATES} replicates required, got {}",
                self.replicates
            )));
        }
        Ok(())
    }

    fn steps_per_side(&self) -> usize {
        (self.half_width / self.step).round() as usize
    }

    /// `(step, slope)` for one side.
    fn side_grid(&self, side: Side) -> Result<(f64, f64)> {
        let slope = drift_slope(self.theta, self.gamma, side)?;
        let factor = match self.grid {
            GridMode::Fixed => 1.0,
            GridMode::DriftScaled => (0.5 / slope).powi(2),
        };
        Ok((self.step * factor, slope))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSamples {
    samples: Vec<f64>,
    config: LimitLawConfig,
    boundary_hit_fraction: f64,
}

impl LimitSamples {
    /// Draws of `U`, sorted ascending.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn config(&self) -> &LimitLawConfig {
        &self.config
    }

    pub fn boundary_hit_fraction(&self) -> f64 {
        self.boundary_hit_fraction
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Wraps externally produced draws. Sorts them; the boundary fraction is
    /// recorded as zero.
    pub fn from_draws(draws: Vec<f64>, config: LimitLawConfig) -> Result<Self> {
        if draws.is_empty() {
            return Err(Error::EmptySample);
        }
        if draws.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("limit-law draws must be finite"));
        }
        Ok(Self {
            samples: numeric::sorted(&draws),
            config,
            boundary_hit_fraction: 0.0,
        })
    }
}

/// Maximum of `W(j h) - slope j h` over `j = 0..=steps`; returns
/// `(value, j)` with the smallest maximizing `j`.
fn side_maximum(rng: &mut crate::rng::Stream, steps: usize, h: f64, slope: f64) -> (f64, usize) {
    let sd = h.sqrt();
    let drift = slope * h;
    let mut w = 0.0f64;
    let mut best = 0.0f64;
    let mut best_j = 0usize;
    for j in 1..=steps {
        let z: f64 = StandardNormal.sample(rng);
        w += sd * z - drift;
        if w > best {
            best = w;
            best_j = j;
        }
    }
    (best, best_j)
}

/// One draw of `U` and whether it landed in the edge zone.
fn one_replicate(config: &LimitLawConfig, r: usize, steps: usize, neg: (f64, f64), pos: (f64, f64)) -> (f64, bool) {
    let mut rng = substream(config.seed, &[r as u64]);
    let (neg_val, neg_j) = side_maximum(&mut rng, steps, neg.0, neg.1);
    let (pos_val, pos_j) = side_maximum(&mut rng, steps, pos.0, pos.1);
    let t_neg = if neg_j == 0 { 0.0 } else { -(neg_j as f64) * neg.0 };
    let t_pos = pos_j as f64 * pos.0;
    let take_pos = if pos_val != neg_val {
        pos_val > neg_val
    } else {
        t_pos < -t_neg
    };
    let (t, j) = if take_pos { (t_pos, pos_j) } else { (t_neg, neg_j) };
    let edge = j as f64 >= (1.0 - BOUNDARY_ZONE) * steps as f64;
    (t, edge)
}

/// Simulates `config.replicates` draws of `U`. Replicate `r` uses the
/// stream `(config.seed, r)`.
pub fn simulate_argmax_samples(config: &LimitLawConfig) -> Result<LimitSamples> {
    config.validate()?;
    let steps = config.steps_per_side();
    let neg = config.side_grid(Side::Negative)?;
    let pos = config.side_grid(Side::NonNegative)?;
    let draws: Vec<(f64, bool)> = (0..config.replicates)
        .into_par_iter()
        .map(|r| one_replicate(config, r, steps, neg, pos))
        .collect();
    let hits = draws.iter().filter(|(_, e)| *e).count();
    let fraction = hits as f64 / config.replicates as f64;
    if fraction > MAX_BOUNDARY_HIT_FRACTION {
        return Err(Error::BoundaryHits {
            fraction,
            limit: MAX_BOUNDARY_HIT_FRACTION,
        });
    }
    let mut samples: Vec<f64> = draws.into_iter().map(|(t, _)| t).collect();
    samples.sort_by(|a, b| a.partial_cmp(b).expect("finite draws"));
    Ok(LimitSamples {
        samples,
        config: *config,
        boundary_hit_fraction: fraction,
    })
}

/// Smallest sample value `v` with `fraction(samples <= v) >= p`.
pub fn quantile(samples: &LimitSamples, p: f64) -> Result<f64> {
    numeric::quantile_sorted(&samples.samples, p)
}

/// `tau2 / d_hat^2`, the factor that maps limit-law units to index units.
pub fn index_scale(tau2: f64, d_hat: f64) -> Result<f64> {
    if d_hat == 0.0 {
        return Err(Error::ZeroShift);
    }
    if !(tau2 > 0.0 && tau2.is_finite() && d_hat.is_finite()) {
        return Err(Error::invalid(format!(
            "long-run variance must be positive and finite, got {tau2}"
        )));
    }
    Ok(tau2 / (d_hat * d_hat))
}

/// Interval `(m_hat - s q_hi, m_hat - s q_lo)` for scale `s`.
pub fn asymptotic_interval_from_quantiles(
    m_hat: usize,
    scale: f64,
    q_lo: f64,
    q_hi: f64,
    alpha: f64,
) -> ConfidenceInterval {
    let m = m_hat as f64;
    ConfidenceInterval {
        lower: m - scale * q_hi,
        upper: m - scale * q_lo,
        level: 1.0 - alpha,
        method: CiMethod::Asymptotic,
    }
}

/// The two limit-law quantiles `(q(alpha/2), q(1 - alpha/2))`.
pub fn asymptotic_quantiles(samples: &LimitSamples, alpha: f64) -> Result<(f64, f64)> {
    check_probability(alpha)?;
    Ok((
        quantile(samples, alpha / 2.0)?,
        quantile(samples, 1.0 - alpha / 2.0)?,
    ))
}

/// Asymptotic interval for the change point, unclipped.
pub fn asymptotic_ci(
    m_hat: usize,
    tau2: f64,
    d_hat: f64,
    samples: &LimitSamples,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    let scale = index_scale(tau2, d_hat)?;
    let (q_lo, q_hi) = asymptotic_quantiles(samples, alpha)?;
    Ok(asymptotic_interval_from_quantiles(m_hat, scale, q_lo, q_hi, alpha))
}

/// Draws of `Z = m_hat - (tau2 / d_hat^2) U`, ascending.
pub fn asymptotic_z_samples(m_hat: usize, tau2: f64, d_hat: f64, samples: &LimitSamples) -> Result<Vec<f64>> {
    let scale = index_scale(tau2, d_hat)?;
    let m = m_hat as f64;
    Ok(samples.samples.iter().rev().map(|u| m - scale * u).collect())
}

/// Cache key: relative location rounded to 1e-3 and the exact `gamma`.
/// For `gamma = 1/2` the law does not depend on the location, so the key
/// collapses to a single entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LimitKey {
    pub theta_milli: u32,
    pub gamma_bits: u64,
}

impl LimitKey {
    pub fn new(theta: f64, gamma: f64) -> Self {
        let theta_milli = if gamma == 0.5 {
            500
        } else {
            ((theta * 1000.0).round() as u32).clamp(1, 999)
        };
        Self {
            theta_milli,
            gamma_bits: gamma.to_bits(),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta_milli as f64 / 1000.0
    }

    pub fn gamma(&self) -> f64 {
        f64::from_bits(self.gamma_bits)
    }
}

/// Limit-law samples keyed by `(theta, gamma)` for one run.
///
/// Entries are filled by [`LimitLawCache::prefetch`]; each key's samples use
/// a seed derived from the run seed and the key, so the content does not
/// depend on which replication asked for it first.
#[derive(Debug)]
pub struct LimitLawCache {
    template: LimitLawConfig,
    seed: u64,
    entries: BTreeMap<LimitKey, std::result::Result<Arc<LimitSamples>, Arc<Error>>>,
}

impl LimitLawCache {
    /// `template` supplies grid and replicate settings; its location, gamma
    /// and seed are replaced per key.
    pub fn new(template: LimitLawConfig, seed: u64) -> Self {
        Self {
            template,
            seed,
            entries: BTreeMap::new(),
        }
    }

    pub fn config_for(&self, key: LimitKey) -> LimitLawConfig {
        LimitLawConfig {
            theta: key.theta(),
            gamma: key.gamma(),
            seed: derive_seed(self.seed, &[tag::LIMIT, key.theta_milli as u64, key.gamma_bits]),
            ..self.template
        }
    }

    /// Simulates every key not yet present, in key order.
    pub fn prefetch(&mut self, keys: impl IntoIterator<Item = LimitKey>) {
        let missing: BTreeSet<LimitKey> = keys
            .into_iter()
            .filter(|k| !self.entries.contains_key(k))
            .collect();
        for key in missing {
            let entry = simulate_argmax_samples(&self.config_for(key))
                .map(Arc::new)
                .map_err(Arc::new);
            self.entries.insert(key, entry);
        }
    }

    /// Samples for `key`, simulating them if needed.
    pub fn get_or_simulate(&mut self, key: LimitKey) -> std::result::Result<Arc<LimitSamples>, Arc<Error>> {
        self.prefetch([key]);
        self.entries[&key].clone()
    }

    pub fn get(&self, key: &LimitKey) -> Option<std::result::Result<Arc<LimitSamples>, Arc<Error>>> {
        self.entries.get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn small(theta: f64, gamma: f64, seed: u64) -> LimitLawConfig {
        LimitLawConfig {
            half_width: 100.0,
            step: 0.1,
            replicates: 20_000,
            seed,
            ..LimitLawConfig::new(theta, gamma)
        }
    }

    #[test]
    fn slopes() {
        for theta in [0.1, 0.37, 0.5, 0.9] {
            assert_eq!(drift_slope(theta, 0.5, Side::Negative).unwrap(), 0.5);
            assert_eq!(drift_slope(theta, 0.5, Side::NonNegative).unwrap(), 0.5);
        }
        assert_eq!(drift_slope(0.5, 0.0, Side::Negative).unwrap(), 0.5);
        assert_eq!(drift_slope(0.5, 0.0, Side::NonNegative).unwrap(), 0.5);
        assert_eq!(drift_slope(0.25, 0.0, Side::Negative).unwrap(), 0.75);
        assert_eq!(drift_slope(0.25, 0.0, Side::NonNegative).unwrap(), 0.25);
        assert!(drift_slope(0.0, 0.2, Side::Negative).is_err());
        assert!(drift_slope(1.0, 0.2, Side::Negative).is_err());
        assert!(drift_slope(0.5, 0.6, Side::Negative).is_err());
    }

    #[test]
    fn slopes_sum_to_one_and_swap_under_reflection() {
        for i in 1..20 {
            let theta = i as f64 / 20.0;
            for j in 0..=10 {
                let gamma = j as f64 / 20.0;
                let a = drift_slope(theta, gamma, Side::Negative).unwrap();
                let b = drift_slope(theta, gamma, Side::NonNegative).unwrap();
                assert!((a + b - 1.0).abs() < 1e-15);
                let a2 = drift_slope(1.0 - theta, gamma, Side::Negative).unwrap();
                let b2 = drift_slope(1.0 - theta, gamma, Side::NonNegative).unwrap();
                assert!((a - b2).abs() < 1e-15 && (b - a2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn config_validation() {
        let ok = small(0.5, 0.5, 0);
        assert!(ok.validate().is_ok());
        assert!(LimitLawConfig { replicates: 999, ..ok }.validate().is_err());
        assert!(LimitLawConfig { step: 1.01, ..ok }.validate().is_err());
        assert!(LimitLawConfig { theta: 1.0, ..ok }.validate().is_err());
        assert!(LimitLawConfig { half_width: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn quantile_examples() {
        let cfg = small(0.5, 0.5, 0);
        let s = LimitSamples::from_draws(vec![4.0, 2.0, 3.0, 1.0], cfg).unwrap();
        assert_eq!(quantile(&s, 0.5).unwrap(), 2.0);
        assert_eq!(quantile(&s, 0.25).unwrap(), 1.0);
        let s = LimitSamples::from_draws(vec![-2.0, -1.0, 1.0, 2.0], cfg).unwrap();
        assert_eq!(quantile(&s, 0.5).unwrap(), -1.0);
        assert!(quantile(&s, 1.0).is_err());
    }

    fn symmetric_samples() -> LimitSamples {
        // 100 points with q(0.05) = -2 and q(0.95) = 2
        let mut v = vec![-2.0; 5];
        v.extend(vec![0.0; 89]);
        v.extend(vec![2.0; 6]);
        LimitSamples::from_draws(v, small(0.5, 0.5, 0)).unwrap()
    }

    #[test]
    fn asymptotic_interval_arithmetic() {
        let s = symmetric_samples();
        assert_eq!(asymptotic_quantiles(&s, 0.1).unwrap(), (-2.0, 2.0));
        let ci = asymptotic_ci(40, 1.0, 1.0, &s, 0.1).unwrap();
        assert_eq!((ci.lower, ci.upper), (38.0, 42.0));
        assert_eq!(ci.method, CiMethod::Asymptotic);
        let wide = asymptotic_ci(40, 2.0, 1.0, &s, 0.1).unwrap();
        assert_eq!((wide.lower, wide.upper), (36.0, 44.0));
        assert_eq!(wide.length(), 2.0 * ci.length());
        let neg_shift = asymptotic_ci(40, 4.0, -2.0, &s, 0.1).unwrap();
        assert_eq!((neg_shift.lower, neg_shift.upper), (38.0, 42.0));
    }

    #[test]
    fn asymptotic_interval_errors() {
        let s = symmetric_samples();
        assert!(matches!(asymptotic_ci(40, 1.0, 0.0, &s, 0.1), Err(Error::ZeroShift)));
        assert!(asymptotic_ci(40, 0.0, 1.0, &s, 0.1).is_err());
        assert!(asymptotic_ci(40, 1.0, 1.0, &s, 1.0).is_err());
    }

    #[test]
    fn width_is_exact_and_monotone_in_alpha() {
        let s = simulate_argmax_samples(&small(0.3, 0.2, 5)).unwrap();
        let mut prev = f64::INFINITY;
        for i in 1..20 {
            let alpha = i as f64 * 0.05;
            let ci = asymptotic_ci(30, 1.7, 0.8, &s, alpha).unwrap();
            let (lo, hi) = asymptotic_quantiles(&s, alpha).unwrap();
            let scale = index_scale(1.7, 0.8).unwrap();
            assert_eq!(ci.length(), (30.0 - scale * lo) - (30.0 - scale * hi));
            assert!(ci.lower <= ci.upper);
            assert!(ci.length() <= prev);
            prev = ci.length();
        }
    }

    #[test]
    fn z_samples_are_sorted_reflection() {
        let s = symmetric_samples();
        let z = asymptotic_z_samples(40, 2.0, 1.0, &s).unwrap();
        assert!(z.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(z[0], 36.0);
        assert_eq!(z[99], 44.0);
    }

    #[test]
    fn simulation_is_deterministic_and_thread_independent() {
        let cfg = LimitLawConfig {
            replicates: 2000,
            ..small(0.4, 0.1, 3)
        };
        let a = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| simulate_argmax_samples(&cfg).unwrap());
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| simulate_argmax_samples(&cfg).unwrap());
        assert_eq!(a, b);
        assert!(a.samples().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn symmetric_law_is_centred() {
        let s = simulate_argmax_samples(&small(0.5, 0.5, 8)).unwrap();
        let med = quantile(&s, 0.5).unwrap();
        assert!(med.abs() <= 0.15, "median {med}");
        let q05 = quantile(&s, 0.05).unwrap();
        let q95 = quantile(&s, 0.95).unwrap();
        assert!((q05 + q95).abs() / q95 <= 0.08, "{q05} {q95}");
    }

    #[test]
    fn fixed_grid_with_shallow_slope_trips_boundary_guard() {
        let cfg = LimitLawConfig {
            theta: 0.02,
            gamma: 0.0,
            half_width: 20.0,
            step: 0.2,
            replicates: 2000,
            seed: 1,
            grid: GridMode::Fixed,
        };
        assert!(matches!(
            simulate_argmax_samples(&cfg),
            Err(Error::BoundaryHits { .. })
        ));
        let scaled = LimitLawConfig {
            grid: GridMode::DriftScaled,
            ..cfg
        };
        let s = simulate_argmax_samples(&scaled).unwrap();
        assert!(s.boundary_hit_fraction() <= MAX_BOUNDARY_HIT_FRACTION);
    }

    /// Coarse fixed-grid simulator written independently of the library
    /// path: Box-Muller normals from a different generator, one shared grid.
    fn brute_force_positive_fraction(theta: f64, gamma: f64, reps: usize) -> f64 {
        let a = (1.0 - theta) * (1.0 - gamma) + theta * gamma;
        let b = (1.0 - theta) * gamma + theta * (1.0 - gamma);
        let (t_max, h) = (50.0, 0.2);
        let steps = (t_max / h) as usize;
        let mut rng = rand::rngs::StdRng::seed_from_u64(4242);
        let mut normal = move || {
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random::<f64>();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut positive = 0usize;
        for _ in 0..reps {
            let mut best_pos = 0.0f64;
            let mut best_neg = 0.0f64;
            let (mut wp, mut wn) = (0.0, 0.0);
            for j in 1..=steps {
                let t = j as f64 * h;
                wp += h.sqrt() * normal();
                wn += h.sqrt() * normal();
                best_pos = best_pos.max(wp - b * t);
                best_neg = best_neg.max(wn - a * t);
            }
            if best_pos > best_neg {
                positive += 1;
            }
        }
        positive as f64 / reps as f64
    }

    fn positive_fraction(theta: f64, gamma: f64, step: f64) -> f64 {
        let cfg = LimitLawConfig {
            step,
            ..small(theta, gamma, 9)
        };
        let s = simulate_argmax_samples(&cfg).unwrap();
        s.samples().iter().filter(|&&u| u > 0.0).count() as f64 / s.len() as f64
    }

    #[test]
    fn shallow_right_slope_puts_mass_on_positive_side() {
        let oracle = brute_force_positive_fraction(0.25, 0.0, 4000);
        assert!(oracle > 0.5, "oracle {oracle}");
        // One-sided maxima of drifted Brownian motion are exponential with
        // rate 2 * slope, so P(U > 0) = a / (a + b) = 0.75 in the continuum.
        // The grid biases it down by O(sqrt(step)); refining must close in.
        let coarse = positive_fraction(0.25, 0.0, 0.1);
        let fine = positive_fraction(0.25, 0.0, 0.025);
        assert!(coarse > 0.5 && coarse < 0.75, "coarse {coarse}");
        assert!(fine > coarse && fine < 0.75, "fine {fine}");
        assert!(0.75 - fine < 0.6 * (0.75 - coarse));
        assert!(oracle < 0.75);
    }

    #[test]
    fn cache_keys_and_reuse() {
        let k1 = LimitKey::new(0.4, 0.5);
        let k2 = LimitKey::new(0.7, 0.5);
        assert_eq!(k1, k2);
        let k3 = LimitKey::new(0.4004, 0.0);
        assert_eq!(k3.theta_milli, 400);
        assert_eq!(LimitKey::new(0.0001, 0.0).theta_milli, 1);
        let template = LimitLawConfig {
            replicates: 1000,
            ..small(0.5, 0.5, 0)
        };
        let mut cache = LimitLawCache::new(template, 99);
        cache.prefetch([k1, k3, k1]);
        assert_eq!(cache.len(), 2);
        let a = cache.get(&k3).unwrap().unwrap();
        let mut other = LimitLawCache::new(template, 99);
        let b = other.get_or_simulate(k3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.config().theta, 0.4);
    }
}
