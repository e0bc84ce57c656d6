//! The `gyrocal` command-line interface.
//!
//! Exit codes: 0 success, 1 I/O or data error, 2 configuration or usage error,
//! 3 degenerate pose geometry.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::calibration::{calibrate_gyroscope, AccelCalibration, AccelSource, CalibrationOptions, RowMode};
use crate::dataio::{
    fmt_num, read_accel_params, read_calibration_options, read_gyro_params, read_recording, read_sim_config,
    write_params, write_recording, write_truth, Recording, Table, TruthFile,
};
use crate::error::{Error, Result};
use crate::simulation::{
    run_monte_carlo_with, run_noise_sweep, substream, MonteCarloOptions, MonteCarloReport, NoiseLevelReport, Sampling,
    SessionGenerator, SimConfig,
};
use crate::stats::{consistency_report, quantile, summarize, DotProductSeries, SummaryStats, QUANTILE_LEVELS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

pub const DEFAULT_RUNS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "gyrocal",
    version,
    about = "Gyroscope scale-factor calibration from gravity/rotation consistency"
)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic session files with ground-truth sidecars.
    Simulate(SimulateArgs),
    /// Calibrate the gyroscope from a session file.
    Calibrate(CalibrateArgs),
    /// Run a Monte-Carlo battery of simulated calibrations.
    Montecarlo(MonteCarloArgs),
    /// Dot-product consistency of a session under given gyroscope parameters.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Simulation config (TOML); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output session path; with --runs > 1 a run number is inserted before the extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Write one summary row per segment instead of every sample.
    #[arg(long)]
    summary: bool,
}

/// Accelerometer calibration choice: `identity`, `fit`, or a parameter file.
#[derive(Debug, Clone, PartialEq)]
enum AccelCalArg {
    Identity,
    Fit,
    File(PathBuf),
}

impl FromStr for AccelCalArg {
    type Err = std::convert::Infallible;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "identity" => AccelCalArg::Identity,
            "fit" => AccelCalArg::Fit,
            path => AccelCalArg::File(PathBuf::from(path)),
        })
    }
}

impl AccelCalArg {
    fn resolve(&self) -> Result<AccelCalibration> {
        Ok(match self {
            AccelCalArg::Identity => AccelCalibration::Identity,
            AccelCalArg::Fit => AccelCalibration::Fit,
            AccelCalArg::File(p) => AccelCalibration::Known(read_accel_params(p)?),
        })
    }

    fn label(&self) -> String {
        match self {
            AccelCalArg::Identity => "identity".into(),
            AccelCalArg::Fit => "fit".into(),
            AccelCalArg::File(p) => p.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum RowsArg {
    PerPose,
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum AccelSourceArg {
    Static,
    Rotating,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    session: PathBuf,
    /// `identity`, `fit`, or a TOML file with accelerometer `scale` and `bias`.
    #[arg(long, default_value = "identity")]
    accel_cal: AccelCalArg,
    /// Write the report table here as well as to stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the estimated gyroscope parameters (TOML).
    #[arg(long)]
    params: Option<PathBuf>,
    /// Calibration options (TOML).
    #[arg(long)]
    options: Option<PathBuf>,
    #[arg(long, value_enum)]
    rows: Option<RowsArg>,
    #[arg(long, value_enum)]
    accel_source: Option<AccelSourceArg>,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RUNS)]
    runs: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-run estimates (CSV).
    #[arg(long)]
    records: Option<PathBuf>,
    /// Comma-separated gyroscope noise deviations (deg/s), one battery each.
    #[arg(long, value_delimiter = ',')]
    noise_levels: Option<Vec<f64>>,
    #[arg(long)]
    threads: Option<usize>,
    /// `identity` or `fit`, applied in every run.
    #[arg(long, default_value = "identity")]
    accel_cal: AccelCalArg,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    session: PathBuf,
    /// Gyroscope parameters (TOML with `scale` and `bias`).
    params: PathBuf,
    #[arg(long, default_value = "identity")]
    accel_cal: AccelCalArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .try_init();

    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Montecarlo(a) => montecarlo(a),
        Command::Analyze(a) => analyze(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_CONFIG,
        Error::DegenerateGeometry { .. } => EXIT_DEGENERATE,
        _ => EXIT_DATA,
    }
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<SimConfig> {
    let mut config = match path {
        Some(p) => read_sim_config(p)?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    Ok(config)
}

/// `out.session` → `out-0003.session` for run 3 of a multi-run simulation.
fn run_path(out: &Path, run: usize, runs: usize) -> PathBuf {
    if runs == 1 {
        return out.to_path_buf();
    }
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-{run:04}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{run:04}"),
    };
    out.with_file_name(name)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let config = load_config(a.config.as_deref(), a.seed)?;
    if a.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let generator = SessionGenerator::new(&config)?;
    let sampling = if a.summary { Sampling::Means } else { Sampling::Rows };
    for run in 0..a.runs {
        let s = generator.generate(&mut substream(config.seed, run as u64), sampling)?;
        let recording = match s.recording {
            Some(r) => r,
            None => Recording::from_session(&s.session)?,
        };
        let path = run_path(&a.out, run, a.runs);
        write_recording(&recording, &path)?;
        write_truth(&TruthFile::new(&s.truth, config.seed, run as u64), &path)?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn push_vec(t: &mut Table, key: &str, v: crate::sensor_models::Vec3) {
    for (axis, value) in ["x", "y", "z"].iter().zip(v.to_array()) {
        t.push([format!("{key}_{axis}"), fmt_num(value)]);
    }
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let mut options = match &a.options {
        Some(p) => read_calibration_options(p)?,
        None => CalibrationOptions::default(),
    };
    if let Some(r) = a.rows {
        options.rows = match r {
            RowsArg::PerPose => RowMode::PerPose,
            RowsArg::PerSample => RowMode::PerSample,
        };
    }
    if let Some(s) = a.accel_source {
        options.accel_source = match s {
            AccelSourceArg::Static => AccelSource::Static,
            AccelSourceArg::Rotating => AccelSource::Rotating,
        };
    }
    let session = read_recording(&a.session)?.to_session(options.rows)?;
    let accel = a.accel_cal.resolve()?.resolve(&session)?;
    let est = calibrate_gyroscope(&session, &accel, &options)?;

    let mut t = Table::new(["key", "value"]);
    t.meta("report", "gyroscope calibration")
        .meta("session", a.session.display())
        .meta("accel_calibration", a.accel_cal.label())
        .meta("rotor_speed", fmt_num(session.rotor_speed))
        .meta("poses", session.poses.len());
    push_vec(&mut t, "scale", est.scale());
    push_vec(&mut t, "bias", est.bias());
    t.push(["l".to_string(), fmt_num(est.l)]);
    push_vec(&mut t, "beta_hat", est.beta_hat);
    push_vec(&mut t, "zero_rate_offset", est.zero_rate_offset);
    push_vec(&mut t, "accel_scale", accel.scale);
    push_vec(&mut t, "accel_bias", accel.bias);
    t.push(["residual_norm".to_string(), fmt_num(est.residual_norm)]);
    t.push([
        "normal_equation_residual".to_string(),
        fmt_num(est.normal_equation_residual),
    ]);
    t.push(["condition_number".to_string(), fmt_num(est.condition_number)]);
    for (i, (u, c)) in est.dots_uncalibrated.iter().zip(&est.dots_calibrated).enumerate() {
        t.push([format!("dot_uncalibrated_{}", i + 1), fmt_num(*u)]);
        t.push([format!("dot_calibrated_{}", i + 1), fmt_num(*c)]);
    }

    print!("{}", t.render());
    if let Some(p) = &a.report {
        t.write(p)?;
    }
    if let Some(p) = &a.params {
        write_params(&est.params, p)?;
    }
    Ok(())
}

const MC_HEADER: [&str; 17] = [
    "sigma",
    "axis",
    "runs",
    "failures",
    "mean",
    "variance",
    "excess_kurtosis",
    "skewness",
    "min",
    "max",
    "error_mean",
    "error_variance",
    "error_range",
    "mean_abs_error",
    "uncalibrated_error_mean",
    "uncalibrated_error_variance",
    "uncalibrated_error_range",
];

fn push_mc_rows(t: &mut Table, sigmas: [f64; 3], r: &MonteCarloReport) {
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        let a = &r.axes[i];
        let e: &SummaryStats = &a.estimate;
        t.push([
            fmt_num(sigmas[i]),
            axis.to_string(),
            r.runs.to_string(),
            r.failures.to_string(),
            fmt_num(e.mean),
            fmt_num(e.variance),
            fmt_num(e.excess_kurtosis),
            fmt_num(e.skewness),
            fmt_num(e.min),
            fmt_num(e.max),
            fmt_num(a.error.mean),
            fmt_num(a.error.variance),
            fmt_num(a.error.range),
            fmt_num(a.mean_abs_error),
            fmt_num(a.uncalibrated_error.mean),
            fmt_num(a.uncalibrated_error.variance),
            fmt_num(a.uncalibrated_error.range),
        ]);
    }
}

fn montecarlo(a: MonteCarloArgs) -> Result<()> {
    let config = load_config(a.config.as_deref(), a.seed)?;
    if a.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    if a.threads == Some(0) {
        return Err(Error::Config("threads must be at least 1".into()));
    }
    let accel_calibration = match a.accel_cal {
        AccelCalArg::File(_) => {
            return Err(Error::Config("montecarlo accepts --accel-cal identity or fit".into()));
        }
        ref other => other.resolve()?,
    };
    let options = MonteCarloOptions {
        threads: a.threads,
        accel_calibration,
        ..MonteCarloOptions::default()
    };

    let levels: Vec<NoiseLevelReport> = match &a.noise_levels {
        Some(sigmas) => {
            if let Some(s) = sigmas.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
                return Err(Error::Config(format!("noise levels must be >= 0, got {s}")));
            }
            run_noise_sweep(&config, sigmas, a.runs, &options)?
        }
        None => vec![NoiseLevelReport {
            sigma: f64::NAN,
            report: run_monte_carlo_with(&config, a.runs, &options)?,
        }],
    };

    let mut t = Table::new(MC_HEADER);
    t.meta("report", "monte-carlo scale factors")
        .meta("seed", config.seed)
        .meta("runs", a.runs)
        .meta("accel_calibration", a.accel_cal.label())
        .meta(
            "max_normal_equation_residual",
            fmt_num(
                levels
                    .iter()
                    .map(|l| l.report.max_normal_equation_residual)
                    .fold(0.0, f64::max),
            ),
        );
    for level in &levels {
        let sigmas = if level.sigma.is_nan() {
            config.gyro_noise_sigma.0.to_array()
        } else {
            [level.sigma; 3]
        };
        push_mc_rows(&mut t, sigmas, &level.report);
    }
    match &a.out {
        Some(p) => t.write(p)?,
        None => print!("{}", t.render()),
    }

    if let Some(p) = &a.records {
        let mut r = Table::new([
            "sigma", "run", "true_x", "true_y", "true_z", "est_x", "est_y", "est_z", "l", "true_l",
        ]);
        r.meta("report", "monte-carlo runs").meta("seed", config.seed);
        for level in &levels {
            for rec in &level.report.records {
                let mut row = vec![fmt_num(level.sigma), rec.index.to_string()];
                row.extend(rec.true_scale.to_array().map(fmt_num));
                row.extend(rec.scale.to_array().map(fmt_num));
                row.push(fmt_num(rec.l));
                row.push(fmt_num(rec.true_l));
                r.push(row);
            }
        }
        r.write(p)?;
    }
    Ok(())
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let session = read_recording(&a.session)?.to_session(RowMode::PerPose)?;
    let gyro = read_gyro_params(&a.params)?;
    let accel = a.accel_cal.resolve()?.resolve(&session)?;
    let report = consistency_report(&session, &gyro, &accel)?;

    let mut header = vec![
        "series".to_string(),
        "n".into(),
        "mean".into(),
        "variance".into(),
        "excess_kurtosis".into(),
        "skewness".into(),
        "min".into(),
        "max".into(),
        "range".into(),
    ];
    header.extend(
        QUANTILE_LEVELS
            .iter()
            .map(|q| format!("q{:02}", (q * 100.0).round() as u32)),
    );
    let mut t = Table::new(header);
    t.meta("report", "dot-product consistency")
        .meta("session", a.session.display())
        .meta("params", a.params.display())
        .meta("accel_calibration", a.accel_cal.label())
        .meta(
            "variance_reduction",
            fmt_num(report.uncalibrated_stats.variance / report.calibrated_stats.variance),
        );
    if let Some(r) = &report.static_vs_rotating {
        t.meta("static_vs_rotating_mean_diff", fmt_num(r.comparison.mean_diff))
            .meta(
                "static_vs_rotating_variance_ratio",
                fmt_num(r.comparison.variance_ratio),
            );
    }
    let mut push = |series: &DotProductSeries| -> Result<()> {
        let s = summarize(&series.values)?;
        let mut row = vec![
            series.label.as_str().to_string(),
            s.n.to_string(),
            fmt_num(s.mean),
            fmt_num(s.variance),
            fmt_num(s.excess_kurtosis),
            fmt_num(s.skewness),
            fmt_num(s.min),
            fmt_num(s.max),
            fmt_num(s.range),
        ];
        row.extend(QUANTILE_LEVELS.iter().map(|q| fmt_num(quantile(&series.values, *q))));
        t.push(row);
        Ok(())
    };
    push(&report.uncalibrated)?;
    push(&report.calibrated)?;
    if let Some(r) = &report.static_vs_rotating {
        push(&r.static_series)?;
        push(&r.rotating_series)?;
    }

    match &a.out {
        Some(p) => t.write(p)?,
        None => print!("{}", t.render()),
    }
    Ok(())
}
