//! Gyroscope scale-factor calibration from gravity/rotation dot-product consistency.
//!
//! During constant-speed rotation about an axis fixed in both the body and the
//! world frame, `L = A · G_true` is the same at every mounting pose. With the
//! zero-rate offset removed, `A_i · (K ∘ G_i) = L` for every pose, so
//! `β̂ = K / L` solves `Xβ = 1` where row i of X is `A_i ∘ G_i`. The rotor speed
//! then fixes L through `|G_i ∘ β̂ L| = ω_n`.
//!
//! The calibration map reported is the usual `G_cal = K ∘ G_raw + b`; since the
//! zero-rate offset `o` is the raw reading at rest, `b = −K ∘ o`.

mod accel;
mod lsq;

pub use accel::{fit_accel_params, MIN_ACCEL_POSES};
pub use lsq::{
    build_design_matrix, recover_l, solve_beta_hat, solve_beta_hat_normal_equations, BetaSolution, DesignMatrix,
    DEFAULT_MAX_CONDITION,
};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sensor_models::{apply_accel_calibration, dot, AccelParams, GyroParams, Vec3};

/// Minimum number of poses a session must contain.
pub const MIN_POSES: usize = 4;

/// Mean of a run of samples together with how many samples it summarises.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleMean {
    pub mean: Vec3,
    pub count: usize,
}

impl SampleMean {
    pub fn from_samples(samples: &[Vec3]) -> Option<Self> {
        Vec3::mean(samples).map(|mean| SampleMean {
            mean,
            count: samples.len(),
        })
    }
}

/// One mounting orientation: a static accelerometer capture and the
/// constant-rotation capture at the same pose. All values are raw sensor output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseObservation {
    pub id: u32,
    /// Mean raw accelerometer reading at rest, m/s².
    pub accel_mean: Vec3,
    pub accel_count: usize,
    /// Mean raw gyroscope reading during rotation, deg/s.
    pub gyro_mean: Vec3,
    /// Mean raw accelerometer reading during rotation, m/s².
    pub rotating_accel_mean: Vec3,
    /// Number of rotating samples behind `gyro_mean`.
    pub sample_count: usize,
}

/// A static accelerometer capture with no paired rotation, usable only for
/// accelerometer pre-calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelPose {
    pub id: u32,
    pub mean: Vec3,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSession {
    pub poses: Vec<PoseObservation>,
    pub accel_only: Vec<AccelPose>,
    /// Rotor speed ω_n, deg/s.
    pub rotor_speed: f64,
    /// Local gravity magnitude, m/s².
    pub gravity: f64,
    /// Gyroscope at rest, for the zero-rate offset.
    pub static_gyro: SampleMean,
}

impl CalibrationSession {
    pub fn validate(&self) -> Result<()> {
        if self.poses.len() < MIN_POSES {
            return Err(Error::InvalidSession(format!(
                "at least {MIN_POSES} poses are required, got {}",
                self.poses.len()
            )));
        }
        if !(self.rotor_speed > 0.0) || !self.rotor_speed.is_finite() {
            return Err(Error::InvalidSession(format!(
                "rotor speed must be positive, got {}",
                self.rotor_speed
            )));
        }
        if !(self.gravity > 0.0) || !self.gravity.is_finite() {
            return Err(Error::InvalidSession(format!(
                "gravity magnitude must be positive, got {}",
                self.gravity
            )));
        }
        if self.static_gyro.count == 0 {
            return Err(Error::NoStaticData);
        }
        for p in &self.poses {
            if p.sample_count == 0 || p.accel_count == 0 {
                return Err(Error::InvalidSession(format!("pose {} has no samples", p.id)));
            }
            if !(p.accel_mean.is_finite() && p.gyro_mean.is_finite() && p.rotating_accel_mean.is_finite()) {
                return Err(Error::InvalidSession(format!("pose {} has non-finite values", p.id)));
            }
        }
        Ok(())
    }

    /// Raw static accelerometer means of every pose, paired or not.
    pub fn all_static_accel(&self) -> Vec<Vec3> {
        self.poses
            .iter()
            .map(|p| p.accel_mean)
            .chain(self.accel_only.iter().map(|p| p.mean))
            .collect()
    }
}

/// Which accelerometer capture enters the design matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelSource {
    #[default]
    Static,
    /// Accelerometer data recorded while rotating (includes centrifugal terms).
    Rotating,
}

/// How rotating samples become design-matrix rows when reading a recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowMode {
    /// One row per pose from the segment means.
    #[default]
    PerPose,
    /// One row per rotating sample.
    PerSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Warn when fewer static gyroscope samples back the offset estimate.
    pub min_static_samples: usize,
    pub max_condition: f64,
    pub rows: RowMode,
    pub accel_source: AccelSource,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            min_static_samples: 100,
            max_condition: DEFAULT_MAX_CONDITION,
            rows: RowMode::PerPose,
            accel_source: AccelSource::Static,
        }
    }
}

/// Accelerometer calibration applied to pose data before the gyroscope fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AccelCalibration {
    /// Use raw accelerometer output.
    #[default]
    Identity,
    /// Fit scale and bias to every static capture in the session.
    Fit,
    Known(AccelParams),
}

impl AccelCalibration {
    pub fn resolve(&self, session: &CalibrationSession) -> Result<AccelParams> {
        match self {
            AccelCalibration::Identity => Ok(AccelParams::IDENTITY),
            AccelCalibration::Fit => fit_accel_params(&session.all_static_accel(), session.gravity),
            AccelCalibration::Known(p) => {
                p.validate()?;
                Ok(*p)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleEstimate {
    /// `K / L`, in 1/(deg/s).
    pub beta_hat: Vec3,
    /// The dot-product constant, deg/s.
    pub l: f64,
    /// Recovered gyroscope calibration (K and b).
    pub params: GyroParams,
    /// Mean static gyroscope reading removed before the fit.
    pub zero_rate_offset: Vec3,
    pub residual_norm: f64,
    pub normal_equation_residual: f64,
    pub condition_number: f64,
    /// Per pose: normalised accelerometer · raw gyroscope.
    pub dots_uncalibrated: Vec<f64>,
    /// Per pose: normalised accelerometer · calibrated gyroscope.
    pub dots_calibrated: Vec<f64>,
}

impl ScaleEstimate {
    pub fn scale(&self) -> Vec3 {
        self.params.scale
    }

    pub fn bias(&self) -> Vec3 {
        self.params.bias
    }
}

/// Zero-rate offset: the componentwise mean of gyroscope samples taken at rest.
pub fn estimate_gyro_bias(static_samples: &[Vec3]) -> Result<Vec3> {
    Vec3::mean(static_samples).ok_or(Error::NoStaticData)
}

/// Calibrated accelerometer means of each pose, divided by the gravity magnitude.
pub fn normalized_accel(
    session: &CalibrationSession,
    accel_params: &AccelParams,
    source: AccelSource,
) -> Result<Vec<Vec3>> {
    session
        .poses
        .iter()
        .map(|p| {
            let raw = match source {
                AccelSource::Static => p.accel_mean,
                AccelSource::Rotating => p.rotating_accel_mean,
            };
            let a = apply_accel_calibration(accel_params, raw) / session.gravity;
            let norm = a.norm();
            if source == AccelSource::Static && !(norm > 0.5 && norm < 1.5) {
                return Err(Error::InvalidSession(format!(
                    "pose {}: normalised acceleration magnitude {norm:.3} outside (0.5, 1.5); was the sensor at rest?",
                    p.id
                )));
            }
            Ok(a)
        })
        .collect()
}

pub fn calibrate_gyroscope(
    session: &CalibrationSession,
    accel_params: &AccelParams,
    options: &CalibrationOptions,
) -> Result<ScaleEstimate> {
    session.validate()?;
    accel_params.validate()?;
    if session.static_gyro.count < options.min_static_samples {
        warn!(
            "zero-rate offset estimated from {} static samples (recommended at least {})",
            session.static_gyro.count, options.min_static_samples
        );
    }
    let offset = session.static_gyro.mean;
    let accel = normalized_accel(session, accel_params, options.accel_source)?;
    let gyro: Vec<Vec3> = session.poses.iter().map(|p| p.gyro_mean).collect();

    let x = build_design_matrix(&accel, &gyro, offset)?;
    let solution = solve_beta_hat(&x, options.max_condition)?;
    let l = recover_l(solution.beta_hat, &gyro, offset, session.rotor_speed)?;
    let scale = solution.beta_hat * l;
    if !(scale.min_component() > 0.0) {
        return Err(Error::SignResolution);
    }
    let params = GyroParams {
        scale,
        bias: -scale.component_mul(offset),
    };

    let dots_uncalibrated = accel.iter().zip(&gyro).map(|(a, g)| dot(*a, *g)).collect();
    let dots_calibrated = accel
        .iter()
        .zip(&gyro)
        .map(|(a, g)| dot(*a, scale.component_mul(*g - offset)))
        .collect();

    Ok(ScaleEstimate {
        beta_hat: solution.beta_hat,
        l,
        params,
        zero_rate_offset: offset,
        residual_norm: solution.residual_norm,
        normal_equation_residual: x.normal_equation_residual(solution.beta_hat),
        condition_number: solution.condition_number,
        dots_uncalibrated,
        dots_calibrated,
    })
}
