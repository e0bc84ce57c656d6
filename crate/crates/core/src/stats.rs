//! Descriptive statistics and dot-product consistency diagnostics.

use serde::Serialize;

use crate::calibration::{normalized_accel, AccelSource, CalibrationSession};
use crate::error::{Error, Result};
use crate::sensor_models::{apply_gyro_calibration, dot, AccelParams, GyroParams, Vec3};

/// Moments and extent of a sample.
///
/// `variance` is the unbiased (n − 1) estimator, `skewness` the adjusted
/// Fisher–Pearson coefficient and `excess_kurtosis` the bias-corrected excess
/// kurtosis (zero for a Gaussian). Both shape statistics fall back to their
/// population forms when `n` is too small for the corrections (n < 3 and n < 4).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    /// Zero variance: shape statistics are reported as 0.
    pub degenerate: bool,
}

impl SummaryStats {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    /// Statistics of a single observation, flagged degenerate.
    pub fn single(value: f64) -> Self {
        SummaryStats {
            n: 1,
            mean: value,
            variance: 0.0,
            skewness: 0.0,
            excess_kurtosis: 0.0,
            min: value,
            max: value,
            range: 0.0,
            degenerate: true,
        }
    }
}

/// Neumaier-compensated sum, so aggregates do not depend on accumulation error.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn summarize(data: &[f64]) -> Result<SummaryStats> {
    let n = data.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "summary statistics need at least 2 values, got {n}"
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("summary statistics need finite values".into()));
    }
    let nf = n as f64;
    let mean = compensated_sum(data.iter().copied()) / nf;
    let m2 = compensated_sum(data.iter().map(|v| (v - mean).powi(2))) / nf;
    let m3 = compensated_sum(data.iter().map(|v| (v - mean).powi(3))) / nf;
    let m4 = compensated_sum(data.iter().map(|v| (v - mean).powi(4))) / nf;

    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let variance = m2 * nf / (nf - 1.0);

    // Spread below round-off of the mean counts as constant.
    let degenerate = m2 <= (f64::EPSILON * mean.abs().max(f64::MIN_POSITIVE)).powi(2);
    let (skewness, excess_kurtosis) = if degenerate {
        (0.0, 0.0)
    } else {
        let g1 = m3 / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        let skew = if n >= 3 {
            (nf * (nf - 1.0)).sqrt() / (nf - 2.0) * g1
        } else {
            g1
        };
        let kurt = if n >= 4 {
            (nf - 1.0) / ((nf - 2.0) * (nf - 3.0)) * ((nf + 1.0) * g2 + 6.0)
        } else {
            g2
        };
        (skew, kurt)
    };

    Ok(SummaryStats {
        n,
        mean,
        variance: if degenerate { 0.0 } else { variance },
        skewness,
        excess_kurtosis,
        min,
        max,
        range: max - min,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesLabel {
    Uncalibrated,
    Calibrated,
    Rotating,
    Static,
}

impl SeriesLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesLabel::Uncalibrated => "uncalibrated",
            SeriesLabel::Calibrated => "calibrated",
            SeriesLabel::Rotating => "rotating",
            SeriesLabel::Static => "static",
        }
    }
}

/// Dot products of paired accelerometer and gyroscope vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DotProductSeries {
    pub label: SeriesLabel,
    pub values: Vec<f64>,
}

pub fn dot_product_series(accel: &[Vec3], gyro: &[Vec3], label: SeriesLabel) -> Result<DotProductSeries> {
    if accel.len() != gyro.len() {
        return Err(Error::InvalidInput(format!(
            "dot product series length mismatch: {} accelerometer vs {} gyroscope vectors",
            accel.len(),
            gyro.len()
        )));
    }
    if accel.is_empty() {
        return Err(Error::InvalidInput("dot product series needs at least one pair".into()));
    }
    let values: Vec<f64> = accel.iter().zip(gyro).map(|(a, g)| dot(*a, *g)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite dot product".into()));
    }
    Ok(DotProductSeries { label, values })
}

pub const QUANTILE_LEVELS: [f64; 5] = [0.05, 0.25, 0.50, 0.75, 0.95];

/// Linear-interpolation quantile (the "type 7" definition) of unsorted data.
pub fn quantile(data: &[f64], q: f64) -> f64 {
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    quantile_sorted(&sorted, q)
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesQuantiles {
    pub label: SeriesLabel,
    pub mean: f64,
    pub variance: f64,
    /// Values at [`QUANTILE_LEVELS`].
    pub quantiles: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionComparison {
    /// `mean(b) − mean(a)`.
    pub mean_diff: f64,
    /// `var(b) / var(a)`; 1 when both are zero, infinite when only `a` is.
    pub variance_ratio: f64,
    pub a: SeriesQuantiles,
    pub b: SeriesQuantiles,
}

fn series_quantiles(s: &DotProductSeries) -> SeriesQuantiles {
    let n = s.values.len() as f64;
    let mean = compensated_sum(s.values.iter().copied()) / n;
    let variance = if s.values.len() > 1 {
        compensated_sum(s.values.iter().map(|v| (v - mean).powi(2))) / (n - 1.0)
    } else {
        0.0
    };
    let mut sorted = s.values.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = QUANTILE_LEVELS.map(|q| quantile_sorted(&sorted, q));
    SeriesQuantiles {
        label: s.label,
        mean,
        variance,
        quantiles,
    }
}

pub fn compare_distributions(a: &DotProductSeries, b: &DotProductSeries) -> Result<DistributionComparison> {
    if a.values.is_empty() || b.values.is_empty() {
        return Err(Error::InvalidInput("cannot compare empty series".into()));
    }
    let qa = series_quantiles(a);
    let qb = series_quantiles(b);
    let variance_ratio = match (qa.variance == 0.0, qb.variance == 0.0) {
        (true, true) => 1.0,
        (true, false) => f64::INFINITY,
        _ => qb.variance / qa.variance,
    };
    Ok(DistributionComparison {
        mean_diff: qb.mean - qa.mean,
        variance_ratio,
        a: qa,
        b: qb,
    })
}

/// Dot-product consistency of a session before and after gyroscope calibration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub uncalibrated: DotProductSeries,
    pub calibrated: DotProductSeries,
    pub uncalibrated_stats: SummaryStats,
    pub calibrated_stats: SummaryStats,
    /// Present when the session carries rotating accelerometer data.
    pub static_vs_rotating: Option<RotationComparison>,
}

/// Calibrated dot products with static versus rotating accelerometer data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RotationComparison {
    pub static_series: DotProductSeries,
    pub rotating_series: DotProductSeries,
    pub comparison: DistributionComparison,
}

/// Per-pose dot products of gravity-normalised accelerometer means with raw and
/// calibrated gyroscope means.
pub fn consistency_report(
    session: &CalibrationSession,
    gyro: &GyroParams,
    accel: &AccelParams,
) -> Result<ConsistencyReport> {
    session.validate()?;
    let a_static = normalized_accel(session, accel, AccelSource::Static)?;
    let raw: Vec<Vec3> = session.poses.iter().map(|p| p.gyro_mean).collect();
    let cal: Vec<Vec3> = raw.iter().map(|g| apply_gyro_calibration(gyro, *g)).collect();
    let uncalibrated = dot_product_series(&a_static, &raw, SeriesLabel::Uncalibrated)?;
    let calibrated = dot_product_series(&a_static, &cal, SeriesLabel::Calibrated)?;

    let has_rotating = session.poses.iter().any(|p| p.rotating_accel_mean != Vec3::ZERO);
    let static_vs_rotating = if has_rotating {
        let a_rot = normalized_accel(session, accel, AccelSource::Rotating)?;
        let static_series = dot_product_series(&a_static, &cal, SeriesLabel::Static)?;
        let rotating_series = dot_product_series(&a_rot, &cal, SeriesLabel::Rotating)?;
        let comparison = compare_distributions(&static_series, &rotating_series)?;
        Some(RotationComparison {
            static_series,
            rotating_series,
            comparison,
        })
    } else {
        None
    };

    Ok(ConsistencyReport {
        uncalibrated_stats: summarize(&uncalibrated.values)?,
        calibrated_stats: summarize(&calibrated.values)?,
        uncalibrated,
        calibrated,
        static_vs_rotating,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn summarize_small_series() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert!((s.variance - 2.5).abs() < 1e-15);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.range, 4.0);
        assert!(s.skewness.abs() < 1e-15);
        // Uniform-ish 5 points: G2 = -1.2 (pandas' `kurt` gives the same).
        assert!((s.excess_kurtosis + 1.2).abs() < 1e-12, "{}", s.excess_kurtosis);
    }

    #[test]
    fn summarize_rejects_short_input() {
        assert!(summarize(&[1.0]).is_err());
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn constant_series_is_degenerate() {
        let s = summarize(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(s.variance, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.excess_kurtosis, 0.0);
        assert!(s.degenerate);
    }

    #[test]
    fn skewed_series_matches_reference() {
        // Reference values from scipy.stats.skew/kurtosis with bias=False.
        let data = [1.0, 2.0, 2.0, 3.0, 10.0];
        let s = summarize(&data).unwrap();
        assert!((s.skewness - 2.028699102080332).abs() < 1e-12, "{}", s.skewness);
        assert!(
            (s.excess_kurtosis - 4.272146531742893).abs() < 1e-12,
            "{}",
            s.excess_kurtosis
        );
    }

    #[test]
    fn gaussian_sample_matches_table_row() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let normal = Normal::new(10.002, 0.027f64.sqrt()).unwrap();
        let data: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let s = summarize(&data).unwrap();
        assert!((s.mean - 10.002).abs() < 0.01);
        assert!((s.variance / 0.027 - 1.0).abs() < 0.1);
        assert!(s.excess_kurtosis.abs() < 0.05);
        assert!(s.skewness.abs() < 0.05);
    }

    #[test]
    fn gaussian_convergence() {
        let (mu, sigma) = (-3.0, 2.0);
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let normal = Normal::new(mu, sigma).unwrap();
        let data: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let s = summarize(&data).unwrap();
        assert!((s.mean - mu).abs() < 5.0 * sigma / (n as f64).sqrt() * 2.0);
        assert!((s.variance - sigma * sigma).abs() < 0.1 * sigma * sigma);
    }

    #[test]
    fn dot_series_examples() {
        let a = vec![Vec3::Z; 4];
        let g = vec![Vec3::new(0.0, 0.0, 10.0); 4];
        let s = dot_product_series(&a, &g, SeriesLabel::Uncalibrated).unwrap();
        assert_eq!(s.values, vec![10.0; 4]);

        let s = dot_product_series(&[Vec3::X, Vec3::Y], &[Vec3::Y, Vec3::Z], SeriesLabel::Static).unwrap();
        assert_eq!(s.values, vec![0.0, 0.0]);

        assert!(dot_product_series(&[Vec3::X], &[Vec3::X, Vec3::Y], SeriesLabel::Static).is_err());
    }

    #[test]
    fn compare_examples() {
        let s = DotProductSeries {
            label: SeriesLabel::Static,
            values: vec![1.0, 2.0, 4.0],
        };
        let c = compare_distributions(&s, &s).unwrap();
        assert_eq!(c.mean_diff, 0.0);
        assert_eq!(c.variance_ratio, 1.0);

        let zeros = DotProductSeries {
            label: SeriesLabel::Static,
            values: vec![0.0; 5],
        };
        let tens = DotProductSeries {
            label: SeriesLabel::Rotating,
            values: vec![10.0; 5],
        };
        let c = compare_distributions(&zeros, &tens).unwrap();
        assert_eq!(c.mean_diff, 10.0);
        assert_eq!(c.variance_ratio, 1.0);
        assert_eq!(c.b.quantiles, [10.0; 5]);
    }

    #[test]
    fn quantiles_interpolate() {
        let data = [4.0, 1.0, 3.0, 2.0, 5.0];
        assert_eq!(quantile(&data, 0.5), 3.0);
        assert_eq!(quantile(&data, 0.25), 2.0);
        assert!((quantile(&data, 0.05) - 1.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symmetric_two_point_series_has_zero_skew(a in 0.001..1e3f64, pairs in 1usize..200) {
            let data: Vec<f64> = (0..2 * pairs).map(|i| if i % 2 == 0 { -a } else { a }).collect();
            let s = summarize(&data).unwrap();
            prop_assert_eq!(s.skewness, 0.0);
        }

        #[test]
        fn dot_series_linear_in_gyro(
            raw in proptest::collection::vec((-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64), 1..20),
            s in -4.0..4.0f64,
        ) {
            let accel: Vec<Vec3> = raw.iter().map(|&(x, y, z)| Vec3::new(x, z, y)).collect();
            let g1: Vec<Vec3> = raw.iter().map(|&(x, y, z)| Vec3::new(y, x, z)).collect();
            let g2: Vec<Vec3> = raw.iter().map(|&(x, y, z)| Vec3::new(z, y, -x)).collect();
            let combo: Vec<Vec3> = g1.iter().zip(&g2).map(|(a, b)| *a * s + *b).collect();
            let lhs = dot_product_series(&accel, &combo, SeriesLabel::Static).unwrap();
            let d1 = dot_product_series(&accel, &g1, SeriesLabel::Static).unwrap();
            let d2 = dot_product_series(&accel, &g2, SeriesLabel::Static).unwrap();
            for i in 0..lhs.values.len() {
                let rhs = s * d1.values[i] + d2.values[i];
                prop_assert!((lhs.values[i] - rhs).abs() <= 1e-10 * (rhs.abs() + 1.0));
            }
        }
    }
}
