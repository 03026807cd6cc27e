//! Circular block bootstrap of the centred residuals.
//!
//! Each resample glues `L = ceil(n / K)` blocks of `K` consecutive centred
//! residuals, read circularly from random start offsets, truncates to `n`,
//! adds the fitted step back and re-estimates the change point. The
//! reflected quantiles of the resulting `m*` sample give the interval.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cusum::{compute_cusum, estimate_changepoint, ChangePointFit};
use crate::error::{Error, Result};
use crate::model::TimeSeries;
use crate::numeric::check_probability;
use crate::rng::substream;

pub const DEFAULT_RESAMPLES: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BlockScheme {
    /// Start offsets uniform on `0..n`.
    #[default]
    CircularOverlapping,
    /// Start offsets uniform on `{0, K, 2K, ..., (L-1)K}`.
    CircularNonoverlapping,
}

impl std::fmt::Display for BlockScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BlockScheme::CircularOverlapping => "circular_overlapping",
            BlockScheme::CircularNonoverlapping => "circular_nonoverlapping",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BootstrapConfig {
    pub block_length: usize,
    pub resamples: usize,
    pub scheme: BlockScheme,
    pub seed: u64,
}

impl BootstrapConfig {
    pub fn new(block_length: usize, resamples: usize, seed: u64) -> Self {
        Self {
            block_length,
            resamples,
            scheme: BlockScheme::CircularOverlapping,
            seed,
        }
    }

    pub fn with_scheme(mut self, scheme: BlockScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.block_length < 1 || self.block_length > n {
            return Err(Error::invalid(format!(
                "block length {} outside 1..={n}",
                self.block_length
            )));
        }
        if self.resamples < 1 {
            return Err(Error::invalid("number of resamples must be at least 1"));
        }
        Ok(())
    }

    /// Number of blocks needed to cover `n` observations.
    pub fn blocks(&self, n: usize) -> usize {
        n.div_ceil(self.block_length)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Bootstrap,
    Asymptotic,
}

impl std::fmt::Display for CiMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CiMethod::Bootstrap => "bootstrap",
            CiMethod::Asymptotic => "asymptotic",
        })
    }
}

/// Real-valued interval for the change point. Bounds are not clipped to
/// the observation range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    /// Nominal coverage `1 - alpha`.
    pub level: f64,
    pub method: CiMethod,
}

impl ConfidenceInterval {
    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    /// Bounds clamped to `[1, n]`.
    pub fn clipped(&self, n: usize) -> (f64, f64) {
        let hi = n as f64;
        (self.lower.clamp(1.0, hi), self.upper.clamp(1.0, hi))
    }
}

/// Draws `blocks` block start offsets (0-based).
pub fn draw_offsets<R: Rng + ?Sized>(
    n: usize,
    block_length: usize,
    blocks: usize,
    scheme: BlockScheme,
    rng: &mut R,
) -> Vec<usize> {
    match scheme {
        BlockScheme::CircularOverlapping => (0..blocks).map(|_| rng.random_range(0..n)).collect(),
        BlockScheme::CircularNonoverlapping => (0..blocks)
            .map(|_| block_length * rng.random_range(0..blocks))
            .collect(),
    }
}

/// Concatenates blocks `residuals[(o + k) mod n]`, `k = 0..K`, for each
/// offset `o`. Output length is `offsets.len() * block_length`.
pub fn resample_errors(residuals: &[f64], block_length: usize, offsets: &[usize]) -> Vec<f64> {
    let n = residuals.len();
    let mut out = Vec::with_capacity(offsets.len() * block_length);
    for &o in offsets {
        out.extend((0..block_length).map(|k| residuals[(o + k) % n]));
    }
    out
}

/// `X*(i) = e*(i) + mu1 [i <= m_hat] + mu2 [m_hat < i <= n]`; extra tail of
/// `e_star` beyond `n` is dropped.
pub fn reconstruct_series(
    e_star: &[f64],
    m_hat: usize,
    mu1_hat: f64,
    mu2_hat: f64,
    n: usize,
) -> Result<TimeSeries> {
    if e_star.len() < n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: e_star.len(),
        });
    }
    let values = e_star[..n]
        .iter()
        .enumerate()
        .map(|(j, e)| e + if j < m_hat { mu1_hat } else { mu2_hat })
        .collect();
    TimeSeries::new(values)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapDistribution {
    /// `m*` values in resample order, each in `1..n`.
    pub samples: Vec<usize>,
    pub m_hat: usize,
    pub gamma: f64,
    pub n: usize,
}

impl BootstrapDistribution {
    /// Reflected values `2 m_hat - m*`.
    pub fn reflected(&self) -> Vec<f64> {
        let c = 2.0 * self.m_hat as f64;
        self.samples.iter().map(|&s| c - s as f64).collect()
    }
}

fn one_resample(fit: &ChangePointFit, config: &BootstrapConfig, b: usize) -> Result<usize> {
    let n = fit.n();
    let mut rng = substream(config.seed, &[b as u64]);
    let offsets = draw_offsets(
        n,
        config.block_length,
        config.blocks(n),
        config.scheme,
        &mut rng,
    );
    let e_star = resample_errors(&fit.residuals_centered, config.block_length, &offsets);
    let x_star = reconstruct_series(&e_star, fit.m_hat, fit.mu1_hat, fit.mu2_hat, n)?;
    Ok(estimate_changepoint(&compute_cusum(&x_star, fit.gamma)?))
}

/// Runs `config.resamples` independent resamples. Resample `b` uses the
/// stream `(config.seed, b)`, so the result does not depend on threading.
pub fn bootstrap_distribution(
    fit: &ChangePointFit,
    config: &BootstrapConfig,
) -> Result<BootstrapDistribution> {
    let n = fit.n();
    config.validate(n)?;
    let samples = (0..config.resamples)
        .into_par_iter()
        .map(|b| one_resample(fit, config, b))
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapDistribution {
        samples,
        m_hat: fit.m_hat,
        gamma: fit.gamma,
        n,
    })
}

/// `q*_L = sup{u : P*(m* < u) <= a}`: the smallest sample value whose
/// cumulative fraction exceeds `a`.
fn lower_sup_quantile(sorted: &[usize], a: f64) -> usize {
    let nf = sorted.len() as f64;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let le = sorted.partition_point(|&s| s <= v);
        if le as f64 / nf > a {
            return v;
        }
        i = le;
    }
    *sorted.last().expect("nonempty")
}

/// `q*_U = inf{u : P*(m* > u) <= a}`: the largest sample value whose upper
/// tail fraction `P*(m* >= v)` exceeds `a`.
fn upper_inf_quantile(sorted: &[usize], a: f64) -> usize {
    let nf = sorted.len() as f64;
    let mut end = sorted.len();
    while end > 0 {
        let v = sorted[end - 1];
        let lt = sorted.partition_point(|&s| s < v);
        if (sorted.len() - lt) as f64 / nf > a {
            return v;
        }
        end = lt;
    }
    sorted[0]
}

/// The two reflected-interval quantiles `(q*_L, q*_U)` at level `alpha`.
pub fn bootstrap_quantiles(dist: &BootstrapDistribution, alpha: f64) -> Result<(usize, usize)> {
    check_probability(alpha)?;
    if dist.samples.len() < 2 {
        return Err(Error::invalid("bootstrap interval needs at least 2 resamples"));
    }
    let mut sorted = dist.samples.clone();
    sorted.sort_unstable();
    let a = alpha / 2.0;
    Ok((lower_sup_quantile(&sorted, a), upper_inf_quantile(&sorted, a)))
}

/// Interval `[2 m_hat - q*_U, 2 m_hat - q*_L]` from the two quantiles.
pub fn bootstrap_interval_from_quantiles(
    m_hat: usize,
    q_lower: f64,
    q_upper: f64,
    alpha: f64,
) -> ConfidenceInterval {
    let c = 2.0 * m_hat as f64;
    let (a, b) = (c - q_upper, c - q_lower);
    ConfidenceInterval {
        lower: a.min(b),
        upper: a.max(b),
        level: 1.0 - alpha,
        method: CiMethod::Bootstrap,
    }
}

pub fn bootstrap_ci(dist: &BootstrapDistribution, alpha: f64) -> Result<ConfidenceInterval> {
    let (ql, qu) = bootstrap_quantiles(dist, alpha)?;
    Ok(bootstrap_interval_from_quantiles(
        dist.m_hat,
        ql as f64,
        qu as f64,
        alpha,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cusum::fit_amoc;
    use crate::rng::substream;
    use proptest::prelude::*;

    fn dist(samples: Vec<usize>, m_hat: usize) -> BootstrapDistribution {
        BootstrapDistribution {
            samples,
            m_hat,
            gamma: 0.5,
            n: 100,
        }
    }

    #[test]
    fn offsets_respect_scheme_ranges() {
        let mut rng = substream(5, &[]);
        for _ in 0..50 {
            let o = draw_offsets(4, 2, 2, BlockScheme::CircularOverlapping, &mut rng);
            assert_eq!(o.len(), 2);
            assert!(o.iter().all(|&x| x < 4));
            let o = draw_offsets(4, 2, 2, BlockScheme::CircularNonoverlapping, &mut rng);
            assert!(o.iter().all(|&x| x == 0 || x == 2));
        }
        let a = draw_offsets(80, 8, 10, BlockScheme::CircularOverlapping, &mut substream(3, &[]));
        let b = draw_offsets(80, 8, 10, BlockScheme::CircularOverlapping, &mut substream(3, &[]));
        assert_eq!(a, b);
    }

    #[test]
    fn circular_wrap() {
        let e = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(resample_errors(&e, 2, &[3, 1]), vec![4.0, 1.0, 2.0, 3.0]);
        assert_eq!(resample_errors(&e, 4, &[0]), e.to_vec());
        assert_eq!(resample_errors(&e, 1, &[2, 2, 0]), vec![3.0, 3.0, 1.0]);
    }

    #[test]
    fn reconstruct_pure_step() {
        let x = reconstruct_series(&[0.0; 4], 2, 0.0, 1.0, 4).unwrap();
        assert_eq!(x.values(), &[0.0, 0.0, 1.0, 1.0]);
        let x = reconstruct_series(&[0.5; 6], 2, 0.0, 1.0, 4).unwrap();
        assert_eq!(x.values(), &[0.5, 0.5, 1.5, 1.5]);
        assert!(reconstruct_series(&[0.0; 3], 2, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn identity_resample_reproduces_fitted_step_plus_centred_noise() {
        let x = TimeSeries::new(vec![0.3, -0.1, 0.2, 2.1, 1.8, 2.4, 1.9]).unwrap();
        let fit = fit_amoc(&x, 0.5).unwrap();
        let e = resample_errors(&fit.residuals_centered, 7, &[0]);
        let xs = reconstruct_series(&e, fit.m_hat, fit.mu1_hat, fit.mu2_hat, 7).unwrap();
        let shift = fit.residuals.iter().sum::<f64>() / 7.0;
        for (a, b) in xs.values().iter().zip(x.values()) {
            assert!((a - (b - shift)).abs() < 1e-14);
        }
    }

    #[test]
    fn noiseless_series_bootstraps_to_its_own_estimate() {
        let mut v = vec![1.0; 30];
        v.extend(vec![-1.0; 50]);
        let fit = fit_amoc(&TimeSeries::new(v).unwrap(), 0.0).unwrap();
        let d = bootstrap_distribution(&fit, &BootstrapConfig::new(8, 200, 1)).unwrap();
        assert!(d.samples.iter().all(|&s| s == 30));
        let ci = bootstrap_ci(&d, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper), (30.0, 30.0));
        assert_eq!(ci.length(), 0.0);
    }

    #[test]
    fn five_point_uniform_gives_symmetric_interval() {
        let d = dist((38..=42).collect(), 40);
        assert_eq!(bootstrap_quantiles(&d, 0.4).unwrap(), (39, 41));
        let ci = bootstrap_ci(&d, 0.4).unwrap();
        assert_eq!((ci.lower, ci.upper), (39.0, 41.0));
        assert!((ci.level - 0.6).abs() < 1e-15);
        // just under a jump the quantiles move out to the extremes
        assert_eq!(bootstrap_quantiles(&d, 0.38).unwrap(), (38, 42));
    }

    #[test]
    fn shifted_distribution_is_reflected() {
        let d = dist((43..=47).collect(), 40);
        let ci = bootstrap_ci(&d, 0.4).unwrap();
        assert_eq!((ci.lower, ci.upper), (34.0, 36.0));
    }

    #[test]
    fn interval_validation() {
        let d = dist(vec![40, 41], 40);
        assert!(matches!(bootstrap_ci(&d, 0.0), Err(Error::ProbabilityOutOfRange(_))));
        assert!(bootstrap_ci(&d, 1.0).is_err());
        assert!(bootstrap_ci(&dist(vec![40], 40), 0.1).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BootstrapConfig::new(0, 10, 0).validate(10).is_err());
        assert!(BootstrapConfig::new(11, 10, 0).validate(10).is_err());
        assert!(BootstrapConfig::new(3, 0, 0).validate(10).is_err());
        assert_eq!(BootstrapConfig::new(3, 1, 0).blocks(10), 4);
        assert_eq!(BootstrapConfig::new(8, 1, 0).blocks(80), 10);
    }

    #[test]
    fn distribution_is_deterministic_across_thread_counts() {
        let x: Vec<f64> = (0..60)
            .map(|i| ((i * 7919) % 13) as f64 / 13.0 + if i >= 25 { 1.0 } else { 0.0 })
            .collect();
        let fit = fit_amoc(&TimeSeries::new(x).unwrap(), 0.5).unwrap();
        let cfg = BootstrapConfig::new(5, 300, 77);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bootstrap_distribution(&fit, &cfg).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert!(a.samples.iter().all(|&s| (1..60).contains(&s)));
    }

    fn sup_quantile_brute(samples: &[usize], a: f64) -> usize {
        // sup over u of {P*(m* < u) <= a}, scanning candidate points and
        // midpoints between them
        let mut cands: Vec<f64> = samples.iter().map(|&s| s as f64).collect();
        cands.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let nf = samples.len() as f64;
        let frac_lt = |u: f64| samples.iter().filter(|&&s| (s as f64) < u).count() as f64 / nf;
        let mut best = f64::NEG_INFINITY;
        for &c in &cands {
            for u in [c - 0.5, c, c + 0.5] {
                if frac_lt(u) <= a && u > best {
                    best = u;
                }
            }
        }
        best as usize
    }

    fn inf_quantile_brute(samples: &[usize], a: f64) -> usize {
        let nf = samples.len() as f64;
        let frac_gt = |u: f64| samples.iter().filter(|&&s| (s as f64) > u).count() as f64 / nf;
        let mut best = f64::INFINITY;
        for &s in samples {
            let c = s as f64;
            for u in [c - 0.5, c, c + 0.5] {
                if frac_gt(u) <= a && u < best {
                    best = u;
                }
            }
        }
        best as usize
    }

    proptest! {
        #[test]
        fn quantiles_match_literal_definitions(samples in prop::collection::vec(1usize..30, 2..60), alpha in 0.01f64..0.99) {
            let d = dist(samples.clone(), 15);
            let (ql, qu) = bootstrap_quantiles(&d, alpha).unwrap();
            prop_assert_eq!(ql, sup_quantile_brute(&samples, alpha / 2.0));
            prop_assert_eq!(qu, inf_quantile_brute(&samples, alpha / 2.0));
        }

        #[test]
        fn reflection_maps_endpoints(samples in prop::collection::vec(1usize..60, 2..80), alpha in 0.01f64..0.99) {
            let m_hat = 30;
            let d = dist(samples.clone(), m_hat);
            let ci = bootstrap_ci(&d, alpha).unwrap();
            let reflected: Vec<usize> = samples.iter().map(|&s| 2 * m_hat - s).collect();
            let r = bootstrap_ci(&dist(reflected, m_hat), alpha).unwrap();
            prop_assert_eq!(r.lower, 2.0 * m_hat as f64 - ci.upper);
            prop_assert_eq!(r.upper, 2.0 * m_hat as f64 - ci.lower);
        }

        #[test]
        fn resamples_are_ordered_circular_blocks(
            e in prop::collection::vec(-5.0f64..5.0, 2..50),
            k_frac in 0.0f64..1.0,
            seed in any::<u64>(),
            overlapping in any::<bool>(),
        ) {
            let n = e.len();
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let l = n.div_ceil(k);
            let scheme = if overlapping { BlockScheme::CircularOverlapping } else { BlockScheme::CircularNonoverlapping };
            let offsets = draw_offsets(n, k, l, scheme, &mut substream(seed, &[]));
            let es = resample_errors(&e, k, &offsets);
            prop_assert_eq!(es.len(), l * k);
            for (b, &o) in offsets.iter().enumerate() {
                for j in 0..k {
                    // membership and within-block circular succession
                    prop_assert_eq!(es[b * k + j], e[(o + j) % n]);
                    prop_assert!(e.contains(&es[b * k + j]));
                }
            }
        }

        #[test]
        fn circular_block_sums_cancel(e in prop::collection::vec(-5.0f64..5.0, 2..60), k_frac in 0.0f64..1.0) {
            let mean = e.iter().sum::<f64>() / e.len() as f64;
            let centred: Vec<f64> = e.iter().map(|x| x - mean).collect();
            let n = centred.len();
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let total: f64 = (0..n).map(|o| resample_errors(&centred, k, &[o]).iter().sum::<f64>()).sum();
            let scale = centred.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            prop_assert!(total.abs() <= 1e-10 * (k * n) as f64 * scale);
        }
    }
}
