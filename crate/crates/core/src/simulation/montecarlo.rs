use rayon::prelude::*;
use serde::Serialize;

use crate::calibration::{calibrate_gyroscope, AccelCalibration, CalibrationOptions};
use crate::error::{Error, Result};
use crate::sensor_models::Vec3;
use crate::stats::{summarize, SummaryStats};

use super::{substream, AxisValue, Sampling, SessionGenerator, SimConfig};

/// Largest tolerated share of failed runs.
pub const MAX_FAILURE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MonteCarloOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    pub accel_calibration: AccelCalibration,
    pub calibration: CalibrationOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRecord {
    pub index: u64,
    pub true_scale: Vec3,
    pub true_bias: Vec3,
    pub scale: Vec3,
    pub bias: Vec3,
    pub l: f64,
    pub true_l: f64,
    pub normal_equation_residual: f64,
    pub condition_number: f64,
}

impl RunRecord {
    /// `K_est − K_true`.
    pub fn scale_error(&self) -> Vec3 {
        self.scale - self.true_scale
    }

    /// Error of leaving the gyroscope uncalibrated (`K = 1`): `1 − K_true`.
    pub fn uncalibrated_error(&self) -> Vec3 {
        Vec3::ONES - self.true_scale
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxisSummary {
    pub estimate: SummaryStats,
    pub error: SummaryStats,
    pub uncalibrated_error: SummaryStats,
    pub mean_abs_error: f64,
    pub mean_abs_uncalibrated_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub runs: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
    /// Statistics for the x, y and z axes.
    pub axes: [AxisSummary; 3],
    pub max_normal_equation_residual: f64,
    /// Successful runs in run order.
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseLevelReport {
    pub sigma: f64,
    pub report: MonteCarloReport,
}

fn describe(values: &[f64]) -> Result<SummaryStats> {
    match values {
        [v] => Ok(SummaryStats::single(*v)),
        _ => summarize(values),
    }
}

fn mean_abs(values: &[f64]) -> f64 {
    values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64
}

fn axis(v: Vec3, i: usize) -> f64 {
    v.to_array()[i]
}

pub fn run_monte_carlo(config: &SimConfig, runs: usize) -> Result<MonteCarloReport> {
    run_monte_carlo_with(config, runs, &MonteCarloOptions::default())
}

/// Runs `runs` independent sessions; run `i` draws from substream `i` of the
/// configured seed, and results are reduced in run order, so the report does
/// not depend on the thread count.
pub fn run_monte_carlo_with(config: &SimConfig, runs: usize, options: &MonteCarloOptions) -> Result<MonteCarloReport> {
    if runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let generator = SessionGenerator::new(config)?;
    let run_one = |index: u64| -> Result<RunRecord> {
        let mut rng = substream(config.seed, index);
        let s = generator.generate(&mut rng, Sampling::Means)?;
        let accel = options.accel_calibration.resolve(&s.session)?;
        let est = calibrate_gyroscope(&s.session, &accel, &options.calibration)?;
        Ok(RunRecord {
            index,
            true_scale: s.truth.gyro.scale,
            true_bias: s.truth.gyro.bias,
            scale: est.scale(),
            bias: est.bias(),
            l: est.l,
            true_l: s.truth.true_l,
            normal_equation_residual: est.normal_equation_residual,
            condition_number: est.condition_number,
        })
    };

    let outcomes: Vec<Result<RunRecord>> = match options.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))?
            .install(|| (0..runs as u64).into_par_iter().map(run_one).collect()),
        None => (0..runs as u64).into_par_iter().map(run_one).collect(),
    };

    let mut records = Vec::with_capacity(runs);
    let mut failures = 0;
    let mut first_failure = None;
    for outcome in outcomes {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                failures += 1;
                first_failure.get_or_insert_with(|| e.to_string());
            }
        }
    }
    if records.is_empty() || failures as f64 > MAX_FAILURE_FRACTION * runs as f64 {
        return Err(Error::TooManyFailures {
            failed: failures,
            runs,
            first: first_failure.unwrap_or_default(),
        });
    }

    let summary = |i: usize| -> Result<AxisSummary> {
        let est: Vec<f64> = records.iter().map(|r| axis(r.scale, i)).collect();
        let err: Vec<f64> = records.iter().map(|r| axis(r.scale_error(), i)).collect();
        let unc: Vec<f64> = records.iter().map(|r| axis(r.uncalibrated_error(), i)).collect();
        Ok(AxisSummary {
            estimate: describe(&est)?,
            error: describe(&err)?,
            uncalibrated_error: describe(&unc)?,
            mean_abs_error: mean_abs(&err),
            mean_abs_uncalibrated_error: mean_abs(&unc),
        })
    };
    let axes = [summary(0)?, summary(1)?, summary(2)?];
    let max_normal_equation_residual = records.iter().map(|r| r.normal_equation_residual).fold(0.0, f64::max);

    Ok(MonteCarloReport {
        seed: config.seed,
        runs,
        failures,
        first_failure,
        axes,
        max_normal_equation_residual,
        records,
    })
}

/// One battery per gyroscope noise level, all with the same seed so that the
/// drawn parameters and geometry are shared across levels.
pub fn run_noise_sweep(
    config: &SimConfig,
    sigmas: &[f64],
    runs: usize,
    options: &MonteCarloOptions,
) -> Result<Vec<NoiseLevelReport>> {
    sigmas
        .iter()
        .map(|&sigma| {
            let cfg = SimConfig {
                gyro_noise_sigma: AxisValue(Vec3::splat(sigma)),
                ..config.clone()
            };
            Ok(NoiseLevelReport {
                sigma,
                report: run_monte_carlo_with(&cfg, runs, options)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::UniformBounds;

    fn fixed_k() -> SimConfig {
        SimConfig {
            gyro_scale: UniformBounds::fixed(Vec3::new(1.1, 0.9, 1.2)),
            gyro_bias: UniformBounds::scalar(0.0, 0.0),
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_noise_is_exact() {
        let cfg = SimConfig {
            rotor_noise_fraction: 0.0,
            gyro_noise_sigma: AxisValue(Vec3::ZERO),
            accel_noise_sigma: 0.0,
            ..fixed_k()
        };
        let r = run_monte_carlo(&cfg, 10).unwrap();
        assert_eq!(r.failures, 0);
        for (i, k) in [1.1, 0.9, 1.2].into_iter().enumerate() {
            let a = &r.axes[i];
            assert!((a.estimate.mean - k).abs() < 1e-12);
            assert!(a.estimate.variance < 1e-24, "{}", a.estimate.variance);
        }
        let single = run_monte_carlo(&cfg, 1).unwrap();
        assert!(single.axes[0].estimate.degenerate);
        assert!((single.axes[0].estimate.mean - 1.1).abs() < 1e-12);
    }

    #[test]
    fn thread_count_does_not_change_the_report() {
        let cfg = SimConfig {
            seed: 17,
            ..SimConfig::default()
        };
        let one = run_monte_carlo_with(
            &cfg,
            64,
            &MonteCarloOptions {
                threads: Some(1),
                ..Default::default()
            },
        )
        .unwrap();
        let four = run_monte_carlo_with(
            &cfg,
            64,
            &MonteCarloOptions {
                threads: Some(4),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn zero_runs_rejected() {
        assert!(run_monte_carlo(&SimConfig::default(), 0).is_err());
    }

    #[test]
    fn failures_are_counted() {
        // Without noise, an axis along x leaves y and z unobservable in every run.
        let cfg = SimConfig {
            rotation_axis: Some(Vec3::X),
            rotor_noise_fraction: 0.0,
            gyro_noise_sigma: AxisValue(Vec3::ZERO),
            accel_noise_sigma: 0.0,
            ..SimConfig::default()
        };
        match run_monte_carlo(&cfg, 5) {
            Err(Error::TooManyFailures { failed, runs, .. }) => assert_eq!((failed, runs), (5, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sweep_variance_grows_with_noise() {
        let cfg = SimConfig {
            samples_per_pose: 10_000,
            ..fixed_k()
        };
        let sweep = run_noise_sweep(&cfg, &[0.1, 10.0], 200, &MonteCarloOptions::default()).unwrap();
        for i in 0..3 {
            assert!(sweep[0].report.axes[i].estimate.variance <= sweep[1].report.axes[i].estimate.variance);
        }
    }
}
