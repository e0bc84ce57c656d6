use serde::{Deserialize, Serialize};

use crate::calibration::MIN_POSES;
use crate::error::{Error, Result};
use crate::sensor_models::Vec3;

/// A scalar applied to all three axes or one value per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum PerAxis {
    Scalar(f64),
    Axes([f64; 3]),
}

impl From<PerAxis> for Vec3 {
    fn from(p: PerAxis) -> Vec3 {
        match p {
            PerAxis::Scalar(v) => Vec3::splat(v),
            PerAxis::Axes(a) => a.into(),
        }
    }
}

/// Per-axis value that may be written as a scalar or a three-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PerAxis", into = "[f64; 3]")]
pub struct AxisValue(pub Vec3);

impl From<PerAxis> for AxisValue {
    fn from(p: PerAxis) -> Self {
        AxisValue(p.into())
    }
}

impl From<AxisValue> for [f64; 3] {
    fn from(v: AxisValue) -> Self {
        v.0.to_array()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
enum BoundsRepr {
    Pair([f64; 2]),
    Table { low: PerAxis, high: PerAxis },
}

/// Independent per-axis uniform distribution `U(low, high)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "BoundsRepr")]
pub struct UniformBounds {
    pub low: Vec3,
    pub high: Vec3,
}

impl From<BoundsRepr> for UniformBounds {
    fn from(b: BoundsRepr) -> Self {
        match b {
            BoundsRepr::Pair([lo, hi]) => UniformBounds::scalar(lo, hi),
            BoundsRepr::Table { low, high } => UniformBounds {
                low: low.into(),
                high: high.into(),
            },
        }
    }
}

impl UniformBounds {
    pub const fn scalar(low: f64, high: f64) -> Self {
        UniformBounds {
            low: Vec3::splat(low),
            high: Vec3::splat(high),
        }
    }

    pub const fn fixed(v: Vec3) -> Self {
        UniformBounds { low: v, high: v }
    }

    /// Maps three unit-interval draws onto the box.
    pub fn at(&self, u: Vec3) -> Vec3 {
        self.low + (self.high - self.low).component_mul(u)
    }

    fn check(&self, name: &str) -> Result<()> {
        let ordered = self.low.x <= self.high.x && self.low.y <= self.high.y && self.low.z <= self.high.z;
        if !self.low.is_finite() || !self.high.is_finite() || !ordered {
            return Err(Error::Config(format!(
                "{name}: bounds must be finite with low <= high, got {} .. {}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccelModel {
    /// Error-free accelerometer (noise only).
    #[default]
    Ideal,
    /// Per-axis scale and bias drawn from `accel_scale` / `accel_bias`.
    Uniform,
}

/// How rotor angles of the calibration poses are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoseAngles {
    /// Independent uniform angles.
    #[default]
    Random,
    /// Equally spaced angles with a random common offset.
    Even,
}

/// Parameters of a simulated calibration session or battery of sessions.
///
/// Rates are in deg/s, accelerations in m/s², noise figures are per-sample
/// standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Servo speed ω, deg/s.
    pub rotor_speed: f64,
    /// Rotor speed noise standard deviation as a fraction of ω.
    pub rotor_noise_fraction: f64,
    pub gyro_noise_sigma: AxisValue,
    pub accel_noise_sigma: f64,
    /// Distribution of the gyroscope scale factors K.
    pub gyro_scale: UniformBounds,
    /// Distribution of the gyroscope bias b, deg/s.
    pub gyro_bias: UniformBounds,
    pub accel_model: AccelModel,
    pub accel_scale: UniformBounds,
    pub accel_bias: UniformBounds,
    pub pose_count: usize,
    /// Static accelerometer-only poses at random orientations, for pre-calibration.
    pub accel_cal_poses: usize,
    pub samples_per_pose: usize,
    pub static_samples: usize,
    /// Sample rate in Hz; sets the arc covered by each rotating segment.
    pub sample_rate: f64,
    pub gravity: f64,
    /// Rotation axis in the body frame; drawn once per battery when absent.
    pub rotation_axis: Option<Vec3>,
    /// Range of the angle between the rotor axis and the vertical, degrees.
    pub tilt_deg: [f64; 2],
    pub pose_angles: PoseAngles,
    /// Position of the sensor relative to the rotor axis (body frame, m).
    /// Enables centrifugal specific force in rotating accelerometer data.
    pub centrifugal_lever_arm: Option<Vec3>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            rotor_speed: 10.0,
            rotor_noise_fraction: 0.05,
            gyro_noise_sigma: AxisValue(Vec3::splat(0.01)),
            accel_noise_sigma: 0.005,
            gyro_scale: UniformBounds::scalar(0.9, 1.1),
            gyro_bias: UniformBounds::scalar(-2.0, 2.0),
            accel_model: AccelModel::Ideal,
            accel_scale: UniformBounds::scalar(0.95, 1.05),
            accel_bias: UniformBounds::scalar(-0.005, 0.005),
            pose_count: 4,
            accel_cal_poses: 12,
            samples_per_pose: 1000,
            static_samples: 1000,
            sample_rate: 100.0,
            gravity: 9.80665,
            rotation_axis: None,
            tilt_deg: [20.0, 70.0],
            pose_angles: PoseAngles::Random,
            centrifugal_lever_arm: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let non_negative = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be >= 0, got {v}")))
            }
        };
        positive("rotor_speed", self.rotor_speed)?;
        positive("sample_rate", self.sample_rate)?;
        positive("gravity", self.gravity)?;
        non_negative("rotor_noise_fraction", self.rotor_noise_fraction)?;
        non_negative("accel_noise_sigma", self.accel_noise_sigma)?;
        for v in self.gyro_noise_sigma.0.to_array() {
            non_negative("gyro_noise_sigma", v)?;
        }
        self.gyro_scale.check("gyro_scale")?;
        self.gyro_bias.check("gyro_bias")?;
        self.accel_scale.check("accel_scale")?;
        self.accel_bias.check("accel_bias")?;
        if self.gyro_scale.low.min_component() <= 0.0 {
            return Err(Error::Config("gyro_scale: scale factors must be positive".into()));
        }
        if self.accel_scale.low.min_component() <= 0.0 {
            return Err(Error::Config("accel_scale: scale factors must be positive".into()));
        }
        let [t0, t1] = self.tilt_deg;
        if !(t0 > 0.0 && t0 <= t1 && t1 < 90.0) {
            return Err(Error::Config(format!(
                "tilt_deg: need 0 < low <= high < 90 degrees, got [{t0}, {t1}]"
            )));
        }
        if self.pose_count < MIN_POSES {
            return Err(Error::Config(format!(
                "pose_count must be at least {MIN_POSES}, got {}",
                self.pose_count
            )));
        }
        if self.samples_per_pose == 0 || self.static_samples == 0 {
            return Err(Error::Config(
                "samples_per_pose and static_samples must be at least 1".into(),
            ));
        }
        if let Some(axis) = self.rotation_axis {
            if !axis.is_finite() || axis.norm() == 0.0 {
                return Err(Error::Config("rotation_axis must be a non-zero vector".into()));
            }
        }
        if let Some(arm) = self.centrifugal_lever_arm {
            if !arm.is_finite() {
                return Err(Error::Config("centrifugal_lever_arm must be finite".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        let c: SimConfig = toml::from_str("").unwrap();
        assert_eq!(c, SimConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn bounds_forms() {
        let c: SimConfig = toml::from_str(
            "gyro_scale = { low = [1.1, 0.9, 1.2], high = [1.1, 0.9, 1.2] }\n\
             gyro_bias = [0, 0]\n\
             gyro_noise_sigma = [0.164, 0.105, 0.245]\n\
             rotor_speed = 20\n",
        )
        .unwrap();
        assert_eq!(c.gyro_scale, UniformBounds::fixed(Vec3::new(1.1, 0.9, 1.2)));
        assert_eq!(c.gyro_bias, UniformBounds::scalar(0.0, 0.0));
        assert_eq!(c.gyro_noise_sigma.0, Vec3::new(0.164, 0.105, 0.245));
        assert_eq!(c.rotor_speed, 20.0);
    }

    #[test]
    fn round_trips_through_toml() {
        let c = SimConfig {
            rotation_axis: Some(Vec3::new(0.1, 0.2, 0.3)),
            centrifugal_lever_arm: Some(Vec3::new(0.1, 0.0, 0.0)),
            ..SimConfig::default()
        };
        let text = toml::to_string(&c).unwrap();
        let back: SimConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation_errors() {
        let c = SimConfig {
            pose_count: 2,
            ..SimConfig::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("pose_count"));
        let c = SimConfig {
            gyro_scale: UniformBounds::scalar(1.1, 0.9),
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SimConfig {
            accel_noise_sigma: -1.0,
            ..SimConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
