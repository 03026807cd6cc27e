//! Command-line front end. `main.rs` only forwards to [`run`].

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bootstrap::{
    bootstrap_distribution, bootstrap_interval_from_quantiles, bootstrap_quantiles, BlockScheme,
    BootstrapConfig, ConfidenceInterval, DEFAULT_RESAMPLES,
};
use crate::cusum::fit_amoc;
use crate::error::Error;
use crate::io::read_series_file;
use crate::limitdist::{
    asymptotic_interval_from_quantiles, asymptotic_quantiles, index_scale, quantile,
    simulate_argmax_samples, GridMode, LimitLawConfig, DEFAULT_HALF_WIDTH, DEFAULT_REPLICATES,
    DEFAULT_STEP,
};
use crate::lrv::{bartlett_lrv, default_window};
use crate::rng::{derive_seed, tag};
use crate::study::{run_study, write_cole_csv, write_coil_csv, write_replications_csv, StudyConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "amoc-ci", version, about = "Change-point confidence intervals for mean-shift series")]
pub struct Cli {
    /// Cap on worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the change point of a series and report both intervals.
    Analyze(AnalyzeArgs),
    /// Run the simulation study and write cole.csv, coil.csv, replications.csv.
    Study(StudyArgs),
    /// Tabulate quantiles of the argmax limit law.
    LimitQuantiles(LimitArgs),
}

#[derive(Debug, Args)]
pub struct LimitLawArgs {
    /// Limit-law replicates
    #[arg(long = "limit-replicates", default_value_t = DEFAULT_REPLICATES)]
    pub replicates: usize,
    /// Half-width T of the simulation grid
    #[arg(long = "limit-half-width", default_value_t = DEFAULT_HALF_WIDTH)]
    pub half_width: f64,
    /// Step h of the simulation grid
    #[arg(long = "limit-step", default_value_t = DEFAULT_STEP)]
    pub step: f64,
    /// Use the same grid on both sides instead of rescaling by the drift
    #[arg(long)]
    pub fixed_grid: bool,
}

impl LimitLawArgs {
    fn grid(&self) -> GridMode {
        if self.fixed_grid {
            GridMode::Fixed
        } else {
            GridMode::DriftScaled
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Series file, one observation per line
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Bootstrap block length K
    #[arg(long)]
    pub block_length: usize,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    pub resamples: usize,
    /// Levels alpha; intervals have nominal coverage 1 - alpha
    #[arg(long, value_delimiter = ',', default_value = "0.05")]
    pub alpha: Vec<f64>,
    /// Bartlett window (default: max(1, floor(0.1 n)))
    #[arg(long)]
    pub lambda: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "circular-overlapping")]
    pub scheme: SchemeArg,
    #[command(flatten)]
    pub limit: LimitLawArgs,
    /// Write the full report as JSON
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Write the bootstrap distribution as CSV (b, m_star)
    #[arg(long)]
    pub bootstrap_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum SchemeArg {
    CircularOverlapping,
    CircularNonoverlapping,
}

impl From<SchemeArg> for BlockScheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::CircularOverlapping => BlockScheme::CircularOverlapping,
            SchemeArg::CircularNonoverlapping => BlockScheme::CircularNonoverlapping,
        }
    }
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// TOML study configuration
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing)
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LimitArgs {
    /// Relative change location theta in (0, 1)
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Probabilities to tabulate
    #[arg(long, value_delimiter = ',', default_value = "0.005,0.025,0.05,0.5,0.95,0.975,0.995")]
    pub p: Vec<f64>,
    #[command(flatten)]
    pub limit: LimitLawArgs,
    /// Write the table here instead of stdout
    #[arg(long)]
    pub output: Option<PathBuf>,
}

/// Failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io(_)
            | Error::Parse { .. }
            | Error::SeriesTooShort { .. }
            | Error::NonFinite { .. }
            | Error::LengthMismatch { .. } => EXIT_DATA,
            Error::BoundaryHits { .. } => EXIT_GUARD,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

fn context(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_USAGE;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::usage("--threads must be at least 1")),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => {
                let (mut o, mut e) = (Vec::new(), Vec::new());
                let r = pool.install(|| dispatch(&cli.command, &mut o, &mut e));
                let _ = out.write_all(&o);
                let _ = err.write_all(&e);
                r
            }
            Err(e) => Err(Failure::usage(e.to_string())),
        },
        None => dispatch(&cli.command, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Analyze(a) => cmd_analyze(a, out, err).map(|_| ()),
        Command::Study(s) => cmd_study(s, out),
        Command::LimitQuantiles(l) => cmd_limit_quantiles(l, out),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub q_lower: f64,
    pub q_upper: f64,
    pub interval: ConfidenceInterval,
    pub clipped: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticReport {
    pub q_lo: f64,
    pub q_hi: f64,
    pub scale: f64,
    pub interval: ConfidenceInterval,
    pub clipped: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub alpha: f64,
    pub bootstrap: BootstrapReport,
    /// `None` when the asymptotic interval is undefined.
    pub asymptotic: Option<AsymptoticReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitLawEcho {
    pub theta: f64,
    pub gamma: f64,
    pub half_width: f64,
    pub step: f64,
    pub replicates: usize,
    pub seed: u64,
    pub grid: GridMode,
    pub boundary_hit_fraction: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub input: String,
    pub n: usize,
    pub gamma: f64,
    pub block_length: usize,
    pub resamples: usize,
    pub scheme: BlockScheme,
    pub seed: u64,
    pub bootstrap_seed: u64,
    pub lambda: usize,
    pub limit_law: LimitLawEcho,
    pub m_hat: usize,
    pub mu1_hat: f64,
    pub mu2_hat: f64,
    pub d_hat: f64,
    pub tau2: f64,
    pub tau2_raw: f64,
    pub tau2_floored: bool,
    pub levels: Vec<LevelReport>,
    pub warnings: Vec<String>,
}

fn check_alphas(alphas: &[f64]) -> Result<(), Failure> {
    if alphas.is_empty() {
        return Err(Failure::usage("at least one --alpha is required"));
    }
    for &a in alphas {
        if !(a > 0.0 && a < 1.0) {
            return Err(Failure::usage(format!("--alpha must lie in (0, 1), got {a}")));
        }
    }
    Ok(())
}

/// Runs the analysis, prints the text report to `out` and returns it.
pub fn cmd_analyze(args: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<AnalyzeReport, Failure> {
    check_alphas(&args.alpha)?;
    let series = read_series_file(&args.input).map_err(context(&args.input))?;
    let n = series.len();
    let fit = fit_amoc(&series, args.gamma)?;
    let lambda = args.lambda.unwrap_or_else(|| default_window(n));
    let lrv = bartlett_lrv(&series, fit.m_hat, lambda)?;
    let mut warnings = Vec::new();
    if lrv.floored {
        warnings.push(format!(
            "long-run variance estimate {} was floored to {}",
            lrv.raw_tau2, lrv.tau2
        ));
    }

    let bootstrap_seed = derive_seed(args.seed, &[tag::BOOTSTRAP]);
    let boot_cfg = BootstrapConfig::new(args.block_length, args.resamples, bootstrap_seed)
        .with_scheme(args.scheme.into());
    let dist = bootstrap_distribution(&fit, &boot_cfg)?;

    let limit_cfg = LimitLawConfig {
        theta: fit.theta_hat(),
        gamma: args.gamma,
        half_width: args.limit.half_width,
        step: args.limit.step,
        replicates: args.limit.replicates,
        seed: derive_seed(args.seed, &[tag::LIMIT]),
        grid: args.limit.grid(),
    };
    let mut boundary = None;
    let limit = if fit.d_hat == 0.0 {
        warnings.push("estimated shift is zero; asymptotic interval undefined".into());
        None
    } else {
        limit_cfg.validate()?;
        match simulate_argmax_samples(&limit_cfg) {
            Ok(s) => {
                boundary = Some(s.boundary_hit_fraction());
                if s.boundary_hit_fraction() > 0.0 {
                    warnings.push(format!(
                        "{:.3}% of limit-law replicates ended near the grid edge",
                        100.0 * s.boundary_hit_fraction()
                    ));
                }
                Some(s)
            }
            Err(e @ Error::BoundaryHits { .. }) => {
                warnings.push(format!("asymptotic interval undefined: {e}"));
                None
            }
            Err(e) => return Err(e.into()),
        }
    };

    let mut levels = Vec::with_capacity(args.alpha.len());
    for &alpha in &args.alpha {
        let (ql, qu) = bootstrap_quantiles(&dist, alpha)?;
        let interval = bootstrap_interval_from_quantiles(fit.m_hat, ql as f64, qu as f64, alpha);
        let bootstrap = BootstrapReport {
            q_lower: ql as f64,
            q_upper: qu as f64,
            clipped: interval.clipped(n),
            interval,
        };
        let asymptotic = match &limit {
            Some(s) => {
                let scale = index_scale(lrv.tau2, fit.d_hat)?;
                let (q_lo, q_hi) = asymptotic_quantiles(s, alpha)?;
                let interval = asymptotic_interval_from_quantiles(fit.m_hat, scale, q_lo, q_hi, alpha);
                Some(AsymptoticReport {
                    q_lo,
                    q_hi,
                    scale,
                    clipped: interval.clipped(n),
                    interval,
                })
            }
            None => None,
        };
        levels.push(LevelReport {
            alpha,
            bootstrap,
            asymptotic,
        });
    }

    let report = AnalyzeReport {
        input: args.input.display().to_string(),
        n,
        gamma: args.gamma,
        block_length: args.block_length,
        resamples: args.resamples,
        scheme: args.scheme.into(),
        seed: args.seed,
        bootstrap_seed,
        lambda,
        limit_law: LimitLawEcho {
            theta: limit_cfg.theta,
            gamma: limit_cfg.gamma,
            half_width: limit_cfg.half_width,
            step: limit_cfg.step,
            replicates: limit_cfg.replicates,
            seed: limit_cfg.seed,
            grid: limit_cfg.grid,
            boundary_hit_fraction: boundary,
        },
        m_hat: fit.m_hat,
        mu1_hat: fit.mu1_hat,
        mu2_hat: fit.mu2_hat,
        d_hat: fit.d_hat,
        tau2: lrv.tau2,
        tau2_raw: lrv.raw_tau2,
        tau2_floored: lrv.floored,
        levels,
        warnings,
    };

    write_text_report(out, &report)?;
    for w in &report.warnings {
        writeln!(err, "warning: {w}")?;
    }
    if let Some(path) = &args.json {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, &report).map_err(|e| Failure::usage(e.to_string()))?;
        writeln!(f)?;
        f.flush()?;
    }
    if let Some(path) = &args.bootstrap_csv {
        let mut f = BufWriter::new(File::create(path)?);
        writeln!(f, "b,m_star")?;
        for (b, m) in dist.samples.iter().enumerate() {
            writeln!(f, "{},{m}", b + 1)?;
        }
        f.flush()?;
    }
    Ok(report)
}

fn write_text_report(out: &mut dyn Write, r: &AnalyzeReport) -> std::io::Result<()> {
    writeln!(out, "input: {} (n = {})", r.input, r.n)?;
    writeln!(
        out,
        "gamma = {}  lambda = {}  block_length = {}  resamples = {}  scheme = {}  seed = {}",
        r.gamma, r.lambda, r.block_length, r.resamples, r.scheme, r.seed
    )?;
    writeln!(
        out,
        "limit law: T = {}  h = {}  replicates = {}  grid = {:?}",
        r.limit_law.half_width, r.limit_law.step, r.limit_law.replicates, r.limit_law.grid
    )?;
    writeln!(out, "m_hat = {}", r.m_hat)?;
    writeln!(out, "mu1_hat = {}  mu2_hat = {}  d_hat = {}", r.mu1_hat, r.mu2_hat, r.d_hat)?;
    writeln!(
        out,
        "tau2 = {}{}",
        r.tau2,
        if r.tau2_floored { " (floored)" } else { "" }
    )?;
    writeln!(out, "alpha,method,lower,upper,length,clipped_lower,clipped_upper")?;
    for level in &r.levels {
        let b = &level.bootstrap;
        writeln!(
            out,
            "{},bootstrap,{},{},{},{},{}",
            level.alpha,
            b.interval.lower,
            b.interval.upper,
            b.interval.length(),
            b.clipped.0,
            b.clipped.1
        )?;
        match &level.asymptotic {
            Some(a) => writeln!(
                out,
                "{},asymptotic,{},{},{},{},{}",
                level.alpha,
                a.interval.lower,
                a.interval.upper,
                a.interval.length(),
                a.clipped.0,
                a.clipped.1
            )?,
            None => writeln!(out, "{},asymptotic,undefined,undefined,,,", level.alpha)?,
        }
    }
    Ok(())
}

/// Loads and validates a study configuration, listing every offending key.
pub fn load_study_config(path: &Path) -> Result<StudyConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let config: StudyConfig = toml::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: invalid config: {e}", path.display())))?;
    config.validate().map_err(|problems| {
        Failure::usage(format!(
            "{}: invalid config:\n  {}",
            path.display(),
            problems.join("\n  ")
        ))
    })?;
    Ok(config)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    master_seed: u64,
    config: &'a StudyConfig,
    undefined_intervals: Vec<UndefinedCount>,
}

#[derive(Serialize)]
struct UndefinedCount {
    method: String,
    d: f64,
    rho: f64,
    gamma: f64,
    block_length: Option<usize>,
    count: usize,
}

pub fn cmd_study(args: &StudyArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = load_study_config(&args.config)?;
    let canonical = toml::to_string(&config).map_err(|e| Failure::usage(e.to_string()))?;
    let hash = Sha256::digest(canonical.as_bytes());
    let config_sha256 = hash.iter().map(|b| format!("{b:02x}")).collect::<String>();

    let output = run_study(&config)?;
    std::fs::create_dir_all(&args.out)?;
    let create = |name: &str| -> std::io::Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(args.out.join(name))?))
    };
    let mut f = create("cole.csv")?;
    write_cole_csv(&mut f, &output.cole)?;
    f.flush()?;
    let mut f = create("coil.csv")?;
    write_coil_csv(&mut f, &output.coil)?;
    f.flush()?;
    let mut f = create("replications.csv")?;
    write_replications_csv(&mut f, &config, &output.replications)?;
    f.flush()?;

    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256,
        master_seed: config.master_seed,
        config: &config,
        undefined_intervals: output
            .undefined
            .iter()
            .map(|(c, count)| UndefinedCount {
                method: c.method.to_string(),
                d: c.d,
                rho: c.rho,
                gamma: c.gamma,
                block_length: c.block_length,
                count: *count,
            })
            .collect(),
    };
    let mut f = create("manifest.json")?;
    serde_json::to_writer_pretty(&mut f, &manifest).map_err(|e| Failure::usage(e.to_string()))?;
    writeln!(f)?;
    f.flush()?;
    writeln!(
        out,
        "wrote cole.csv, coil.csv, replications.csv, manifest.json to {}",
        args.out.display()
    )?;
    Ok(())
}

pub fn cmd_limit_quantiles(args: &LimitArgs, out: &mut dyn Write) -> Result<(), Failure> {
    for &p in &args.p {
        if !(p > 0.0 && p < 1.0) {
            return Err(Failure::usage(format!("--p must lie in (0, 1), got {p}")));
        }
    }
    let cfg = LimitLawConfig {
        theta: args.theta,
        gamma: args.gamma,
        half_width: args.limit.half_width,
        step: args.limit.step,
        replicates: args.limit.replicates,
        seed: args.seed,
        grid: args.limit.grid(),
    };
    let samples = simulate_argmax_samples(&cfg).map_err(|e| {
        let mut f = Failure::from(e);
        if f.code == EXIT_GUARD {
            f.message.push_str(" (try a larger --limit-half-width)");
        }
        f
    })?;
    let mut table = String::from("p,q\n");
    for &p in &args.p {
        table.push_str(&format!("{p},{}\n", quantile(&samples, p)?));
    }
    match &args.output {
        Some(path) => std::fs::write(path, table)?,
        None => out.write_all(table.as_bytes())?,
    }
    Ok(())
}
