//! Simulation study: coverage (CoLe) and interval-length (CoIL) datasets
//! for the asymptotic and bootstrap intervals over a grid of AR(1) + step
//! configurations.
//!
//! A *data cell* is one `(d, rho, gamma)` triple. Every block length `K`
//! in a data cell is evaluated on the same simulated series, so the methods
//! are compared on common data. Streams are keyed by
//! `(master_seed, data cell, replication)` and results are merged in index
//! order, which makes the output independent of thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_ci, bootstrap_distribution, BlockScheme, BootstrapConfig, CiMethod};
use crate::cusum::{check_gamma, fit_amoc, ChangePointFit};
use crate::error::{Error, Result};
use crate::limitdist::{
    asymptotic_ci, asymptotic_z_samples, GridMode, LimitKey, LimitLawCache, LimitLawConfig,
    LimitSamples,
};
use crate::lrv::{bartlett_lrv, window_for};
use crate::model::{ar1_generate, make_amoc_series, Ar1Params, AmocSpec, TimeSeries};
use crate::numeric::{self, count_le, count_lt};
use crate::rng::{derive_seed, substream, tag};

/// Limit-law simulation settings used by the study. Location, gamma and
/// seed are filled in per cache entry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitLawTemplate {
    pub half_width: f64,
    pub step: f64,
    pub replicates: usize,
    pub grid: GridMode,
}

impl Default for LimitLawTemplate {
    fn default() -> Self {
        Self {
            half_width: 100.0,
            step: 0.1,
            replicates: 10_000,
            grid: GridMode::DriftScaled,
        }
    }
}

impl LimitLawTemplate {
    fn config(&self) -> LimitLawConfig {
        LimitLawConfig {
            half_width: self.half_width,
            step: self.step,
            replicates: self.replicates,
            grid: self.grid,
            ..LimitLawConfig::new(0.5, 0.5)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub n: usize,
    pub m: usize,
    pub mu: f64,
    pub d_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub innovation_sd: f64,
    pub gamma_values: Vec<f64>,
    pub block_lengths: Vec<usize>,
    pub scheme: BlockScheme,
    pub replications: usize,
    pub resamples: usize,
    pub lambda_rule: f64,
    pub alpha_grid: Vec<f64>,
    pub master_seed: u64,
    pub limit_law: LimitLawTemplate,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n: 80,
            m: 40,
            mu: 0.0,
            d_values: vec![0.5, 1.0, 2.0, 4.0],
            rho_values: vec![0.1, 0.3],
            innovation_sd: 1.0,
            gamma_values: vec![0.0, 0.5],
            block_lengths: vec![4, 8, 16],
            scheme: BlockScheme::CircularOverlapping,
            replications: 500,
            resamples: 1000,
            lambda_rule: 0.1,
            alpha_grid: (1..=10).map(|i| i as f64 / 100.0).collect(),
            master_seed: 1,
            limit_law: LimitLawTemplate::default(),
        }
    }
}

impl StudyConfig {
    /// Checks every field, collecting all problems as `key: message`.
    pub fn validate(&self) -> std::result::Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let mut bad = |key: &str, msg: String| problems.push(format!("{key}: {msg}"));
        if let Err(e) = AmocSpec::new(self.n, self.m, self.mu, 0.0) {
            bad("n/m", e.to_string());
        }
        if self.d_values.is_empty() || self.d_values.iter().any(|d| !d.is_finite()) {
            bad("d_values", "must be a nonempty list of finite numbers".into());
        }
        if self.rho_values.is_empty() {
            bad("rho_values", "must be nonempty".into());
        }
        for &rho in &self.rho_values {
            if let Err(e) = Ar1Params::new(rho, self.innovation_sd) {
                bad("rho_values", e.to_string());
            }
        }
        if self.gamma_values.is_empty() {
            bad("gamma_values", "must be nonempty".into());
        }
        for &g in &self.gamma_values {
            if let Err(e) = check_gamma(g) {
                bad("gamma_values", e.to_string());
            }
        }
        if self.block_lengths.is_empty() || self.block_lengths.iter().any(|&k| k < 1 || k > self.n) {
            bad("block_lengths", format!("must be a nonempty list within 1..={}", self.n));
        }
        if self.replications < 1 {
            bad("replications", "must be at least 1".into());
        }
        if self.resamples < 2 {
            bad("resamples", "must be at least 2".into());
        }
        if !(self.lambda_rule > 0.0 && self.lambda_rule < 1.0) {
            bad("lambda_rule", "must lie in (0, 1)".into());
        }
        if self.alpha_grid.is_empty()
            || self.alpha_grid.iter().any(|&a| !(a > 0.0 && a < 1.0))
            || self.alpha_grid.windows(2).any(|w| w[0] >= w[1])
        {
            bad("alpha_grid", "must be a nonempty ascending list in (0, 1)".into());
        }
        if let Err(e) = self.limit_law.config().validate() {
            bad("limit_law", e.to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }

    /// Data cells `(d, rho, gamma)` in enumeration order.
    pub fn data_cells(&self) -> Vec<DataCell> {
        let mut cells = Vec::new();
        for &d in &self.d_values {
            for &rho in &self.rho_values {
                for &gamma in &self.gamma_values {
                    cells.push(DataCell { d, rho, gamma });
                }
            }
        }
        cells
    }

    pub fn window(&self) -> usize {
        window_for(self.n, self.lambda_rule)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DataCell {
    pub d: f64,
    pub rho: f64,
    pub gamma: f64,
}

/// Identifies a row group in the output datasets. `block_length` is `None`
/// for the asymptotic method.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MethodCell {
    pub method: CiMethod,
    pub d: f64,
    pub rho: f64,
    pub gamma: f64,
    pub block_length: Option<usize>,
}

/// `2 min(P(Z <= m), P(Z >= m))` over an empirical sample of `Z`.
pub fn cole_statistic(z: &[f64], m: f64) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptySample);
    }
    let sorted = numeric::sorted(z);
    Ok(cole_statistic_sorted(&sorted, m))
}

fn cole_statistic_sorted(sorted: &[f64], m: f64) -> f64 {
    let nf = sorted.len() as f64;
    let le = count_le(sorted, m) as f64 / nf;
    let ge = (sorted.len() - count_lt(sorted, m)) as f64 / nf;
    2.0 * le.min(ge)
}

/// Mean and empirical quartiles (same quantile rule as the limit law).
pub fn coil_summaries(lengths: &[f64]) -> Result<(f64, f64, f64)> {
    if lengths.is_empty() {
        return Err(Error::EmptySample);
    }
    let mean = numeric::mean(lengths);
    let sorted = numeric::sorted(lengths);
    Ok((
        mean,
        numeric::quantile_sorted(&sorted, 0.25)?,
        numeric::quantile_sorted(&sorted, 0.75)?,
    ))
}

/// Outcome of one method on one replication.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodRecord {
    pub method: CiMethod,
    pub block_length: Option<usize>,
    /// `None` when the interval is undefined (zero shift estimate or a
    /// failed limit-law simulation).
    pub p_stat: Option<f64>,
    /// Interval length per entry of the alpha grid.
    pub lengths: Option<Vec<f64>>,
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub cell: usize,
    pub replication: usize,
    pub m_hat: usize,
    pub d_hat: f64,
    pub tau2: f64,
    pub tau2_floored: bool,
    pub methods: Vec<MethodRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColeRow {
    pub cell: MethodCell,
    pub alpha: f64,
    pub empirical_noncoverage: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoilRow {
    pub cell: MethodCell,
    pub alpha: f64,
    pub mean_len: Option<f64>,
    pub q25_len: Option<f64>,
    pub q75_len: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ColeDataset {
    pub rows: Vec<ColeRow>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoilDataset {
    pub rows: Vec<CoilRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyOutput {
    pub cole: ColeDataset,
    pub coil: CoilDataset,
    pub replications: Vec<ReplicationRecord>,
    /// Replications per method cell whose interval was undefined.
    pub undefined: Vec<(MethodCell, usize)>,
}

struct Prepared {
    series: TimeSeries,
    fit: ChangePointFit,
    tau2: f64,
    floored: bool,
}

fn prepare(config: &StudyConfig, cell_idx: usize, cell: &DataCell, r: usize) -> Result<Prepared> {
    let spec = AmocSpec::new(config.n, config.m, config.mu, cell.d)?;
    let params = Ar1Params::new(cell.rho, config.innovation_sd)?;
    let mut rng = substream(config.master_seed, &[tag::SERIES, cell_idx as u64, r as u64]);
    let errors = ar1_generate(&params, config.n, &mut rng)?;
    let series = make_amoc_series(&spec, &errors)?;
    let fit = fit_amoc(&series, cell.gamma)?;
    let lrv = bartlett_lrv(&series, fit.m_hat, config.window())?;
    Ok(Prepared {
        series,
        fit,
        tau2: lrv.tau2,
        floored: lrv.floored,
    })
}

fn undefined(method: CiMethod, block_length: Option<usize>, note: String) -> MethodRecord {
    MethodRecord {
        method,
        block_length,
        p_stat: None,
        lengths: None,
        note: Some(note),
    }
}

fn asymptotic_record(
    config: &StudyConfig,
    prep: &Prepared,
    limit: Option<&std::result::Result<Arc<LimitSamples>, Arc<Error>>>,
) -> Result<MethodRecord> {
    let fit = &prep.fit;
    if fit.d_hat == 0.0 {
        return Ok(undefined(CiMethod::Asymptotic, None, Error::ZeroShift.to_string()));
    }
    let samples = match limit {
        Some(Ok(s)) => s,
        Some(Err(e)) => return Ok(undefined(CiMethod::Asymptotic, None, e.to_string())),
        None => return Err(Error::invalid("limit-law cache was not prefetched")),
    };
    let z = asymptotic_z_samples(fit.m_hat, prep.tau2, fit.d_hat, samples)?;
    let p_stat = cole_statistic_sorted(&z, config.m as f64);
    let lengths = config
        .alpha_grid
        .iter()
        .map(|&a| asymptotic_ci(fit.m_hat, prep.tau2, fit.d_hat, samples, a).map(|ci| ci.length()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MethodRecord {
        method: CiMethod::Asymptotic,
        block_length: None,
        p_stat: Some(p_stat),
        lengths: Some(lengths),
        note: None,
    })
}

fn bootstrap_record(
    config: &StudyConfig,
    prep: &Prepared,
    cell_idx: usize,
    r: usize,
    k_idx: usize,
) -> Result<MethodRecord> {
    let k = config.block_lengths[k_idx];
    let seed = derive_seed(
        config.master_seed,
        &[tag::BOOTSTRAP, cell_idx as u64, r as u64, k_idx as u64],
    );
    let boot = BootstrapConfig::new(k, config.resamples, seed).with_scheme(config.scheme);
    let dist = bootstrap_distribution(&prep.fit, &boot)?;
    let z = numeric::sorted(&dist.reflected());
    let p_stat = cole_statistic_sorted(&z, config.m as f64);
    let lengths = config
        .alpha_grid
        .iter()
        .map(|&a| bootstrap_ci(&dist, a).map(|ci| ci.length()))
        .collect::<Result<Vec<_>>>()?;
    Ok(MethodRecord {
        method: CiMethod::Bootstrap,
        block_length: Some(k),
        p_stat: Some(p_stat),
        lengths: Some(lengths),
        note: None,
    })
}

/// Runs the full study. Deterministic given the config.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    config
        .validate()
        .map_err(|p| Error::invalid(p.join("; ")))?;
    let cells = config.data_cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.replications).map(move |r| (c, r)))
        .collect();

    let prepared = jobs
        .par_iter()
        .map(|&(c, r)| prepare(config, c, &cells[c], r))
        .collect::<Result<Vec<_>>>()?;

    let mut cache = LimitLawCache::new(config.limit_law.config(), config.master_seed);
    cache.prefetch(
        prepared
            .iter()
            .filter(|p| p.fit.d_hat != 0.0)
            .map(|p| LimitKey::new(p.fit.theta_hat(), p.fit.gamma)),
    );

    let records = jobs
        .par_iter()
        .zip(prepared.par_iter())
        .map(|(&(c, r), prep)| {
            let key = LimitKey::new(prep.fit.theta_hat(), prep.fit.gamma);
            let mut methods = vec![asymptotic_record(config, prep, cache.get(&key).as_ref())?];
            for k_idx in 0..config.block_lengths.len() {
                methods.push(bootstrap_record(config, prep, c, r, k_idx)?);
            }
            debug_assert_eq!(prep.series.len(), config.n);
            Ok(ReplicationRecord {
                cell: c,
                replication: r,
                m_hat: prep.fit.m_hat,
                d_hat: prep.fit.d_hat,
                tau2: prep.tau2,
                tau2_floored: prep.floored,
                methods,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(aggregate(config, &cells, records))
}

fn aggregate(config: &StudyConfig, cells: &[DataCell], records: Vec<ReplicationRecord>) -> StudyOutput {
    // method slot 0 is asymptotic, slot 1 + k_idx is bootstrap with K[k_idx]
    let slots = 1 + config.block_lengths.len();
    let mut cole = ColeDataset::default();
    let mut coil = CoilDataset::default();
    let mut undefined_counts = Vec::new();
    let mut by_cell: BTreeMap<usize, Vec<&ReplicationRecord>> = BTreeMap::new();
    for rec in &records {
        by_cell.entry(rec.cell).or_default().push(rec);
    }
    for (c, cell) in cells.iter().enumerate() {
        let recs = by_cell.get(&c).map(Vec::as_slice).unwrap_or(&[]);
        for slot in 0..slots {
            let first = &recs[0].methods[slot];
            let mcell = MethodCell {
                method: first.method,
                d: cell.d,
                rho: cell.rho,
                gamma: cell.gamma,
                block_length: first.block_length,
            };
            let outcomes: Vec<&MethodRecord> = recs.iter().map(|r| &r.methods[slot]).collect();
            let n_undefined = outcomes.iter().filter(|m| m.p_stat.is_none()).count();
            undefined_counts.push((mcell, n_undefined));
            let total = outcomes.len() as f64;
            for (ai, &alpha) in config.alpha_grid.iter().enumerate() {
                // an undefined interval cannot cover m, so it counts as an exceedance
                let exceed = outcomes
                    .iter()
                    .filter(|m| m.p_stat.is_none_or(|p| p <= alpha))
                    .count();
                cole.rows.push(ColeRow {
                    cell: mcell,
                    alpha,
                    empirical_noncoverage: exceed as f64 / total,
                });
                let lengths: Vec<f64> = outcomes
                    .iter()
                    .filter_map(|m| m.lengths.as_ref().map(|l| l[ai]))
                    .collect();
                let summary = coil_summaries(&lengths).ok();
                coil.rows.push(CoilRow {
                    cell: mcell,
                    alpha,
                    mean_len: summary.map(|s| s.0),
                    q25_len: summary.map(|s| s.1),
                    q75_len: summary.map(|s| s.2),
                });
            }
        }
    }
    StudyOutput {
        cole,
        coil,
        replications: records,
        undefined: undefined_counts,
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_k(k: Option<usize>) -> String {
    k.map(|x| x.to_string()).unwrap_or_default()
}

/// `method,d,rho,gamma,K,alpha,empirical_noncoverage`
pub fn write_cole_csv<W: Write>(mut w: W, data: &ColeDataset) -> std::io::Result<()> {
    writeln!(w, "method,d,rho,gamma,K,alpha,empirical_noncoverage")?;
    for row in &data.rows {
        let c = &row.cell;
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            c.method,
            c.d,
            c.rho,
            c.gamma,
            opt_k(c.block_length),
            row.alpha,
            row.empirical_noncoverage
        )?;
    }
    Ok(())
}

/// `method,d,rho,gamma,K,alpha,mean_len,q25_len,q75_len`
pub fn write_coil_csv<W: Write>(mut w: W, data: &CoilDataset) -> std::io::Result<()> {
    writeln!(w, "method,d,rho,gamma,K,alpha,mean_len,q25_len,q75_len")?;
    for row in &data.rows {
        let c = &row.cell;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            c.method,
            c.d,
            c.rho,
            c.gamma,
            opt_k(c.block_length),
            row.alpha,
            opt(row.mean_len),
            opt(row.q25_len),
            opt(row.q75_len)
        )?;
    }
    Ok(())
}

/// One row per `(cell, replication, method)`; per-alpha lengths in columns
/// `len_<alpha>`.
pub fn write_replications_csv<W: Write>(
    mut w: W,
    config: &StudyConfig,
    records: &[ReplicationRecord],
) -> std::io::Result<()> {
    let cells = config.data_cells();
    write!(w, "d,rho,gamma,r,method,K,m_hat,d_hat,tau2,tau2_floored,p_stat")?;
    for a in &config.alpha_grid {
        write!(w, ",len_{a}")?;
    }
    writeln!(w)?;
    for rec in records {
        let cell = &cells[rec.cell];
        for m in &rec.methods {
            write!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{}",
                cell.d,
                cell.rho,
                cell.gamma,
                rec.replication,
                m.method,
                opt_k(m.block_length),
                rec.m_hat,
                rec.d_hat,
                rec.tau2,
                rec.tau2_floored,
                opt(m.p_stat)
            )?;
            match &m.lengths {
                Some(ls) => {
                    for l in ls {
                        write!(w, ",{l}")?;
                    }
                }
                None => {
                    for _ in &config.alpha_grid {
                        write!(w, ",")?;
                    }
                }
            }
            writeln!(w)?;
        }
    }
    Ok(())
}
