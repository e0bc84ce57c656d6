use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationOptions;
use crate::error::{Error, Result};
use crate::sensor_models::{AccelParams, GyroParams, Vec3};
use crate::simulation::{SimConfig, Truth};

use super::write_atomic;

fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_end())))
}

pub fn read_sim_config(path: &Path) -> Result<SimConfig> {
    let config: SimConfig = read_toml(path)?;
    config
        .validate()
        .map_err(|e| Error::Config(format!("{}: {}", path.display(), strip_prefix(&e))))?;
    Ok(config)
}

pub fn read_calibration_options(path: &Path) -> Result<CalibrationOptions> {
    let options: CalibrationOptions = read_toml(path)?;
    if !(options.max_condition > 1.0) {
        return Err(Error::Config(format!(
            "{}: max_condition must exceed 1, got {}",
            path.display(),
            options.max_condition
        )));
    }
    Ok(options)
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

pub fn read_gyro_params(path: &Path) -> Result<GyroParams> {
    let p: GyroParams = read_toml(path)?;
    p.validate()?;
    Ok(p)
}

pub fn read_accel_params(path: &Path) -> Result<AccelParams> {
    let p: AccelParams = read_toml(path)?;
    p.validate()?;
    Ok(p)
}

/// Writes gyroscope or accelerometer parameters as TOML.
pub fn write_params<T: Serialize>(params: &T, path: &Path) -> Result<()> {
    let text = toml::to_string(params).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_atomic(path, text.as_bytes())
}

/// Ground truth stored beside a synthetic session. Session readers never open it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthFile {
    pub gyro: GyroParams,
    pub accel: AccelParams,
    pub truth: TruthInfo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthInfo {
    pub seed: u64,
    pub run: u64,
    pub rotation_axis: Vec3,
    pub tilt_deg: f64,
    /// Dot product of unit gravity with the nominal rotation rate, deg/s.
    pub true_l: f64,
}

impl TruthFile {
    pub fn new(truth: &Truth, seed: u64, run: u64) -> Self {
        TruthFile {
            gyro: truth.gyro,
            accel: truth.accel,
            truth: TruthInfo {
                seed,
                run,
                rotation_axis: truth.rotation_axis,
                tilt_deg: truth.tilt.to_degrees(),
                true_l: truth.true_l,
            },
        }
    }
}

/// `<session>.truth.toml`.
pub fn truth_path(session: &Path) -> PathBuf {
    let mut name = session.as_os_str().to_owned();
    name.push(".truth.toml");
    PathBuf::from(name)
}

pub fn write_truth(truth: &TruthFile, session: &Path) -> Result<()> {
    let text = toml::to_string(truth).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_atomic(&truth_path(session), text.as_bytes())
}

pub fn read_truth(session: &Path) -> Result<TruthFile> {
    read_toml(&truth_path(session))
}
