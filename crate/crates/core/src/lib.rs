//! Field calibration of triaxial MEMS gyroscopes.
//!
//! During constant-speed rotation about an axis that is fixed in both the
//! sensor and the world frame, the dot product between gravity and the true
//! angular rate is the same at every mounting pose. Scale-factor errors break
//! that consistency; a linear least-squares fit restores it, and the known
//! rotor speed fixes the overall scale.
//!
//! ```
//! use gyrocal::calibration::{calibrate_gyroscope, CalibrationOptions};
//! use gyrocal::simulation::{generate_session, substream, AxisValue, SimConfig};
//! use gyrocal::{AccelParams, Vec3};
//!
//! let config = SimConfig {
//!     rotor_noise_fraction: 0.0,
//!     gyro_noise_sigma: AxisValue(Vec3::ZERO),
//!     accel_noise_sigma: 0.0,
//!     ..SimConfig::default()
//! };
//! let synthetic = generate_session(&config, &mut substream(7, 0)).unwrap();
//! let estimate = calibrate_gyroscope(
//!     &synthetic.session,
//!     &AccelParams::IDENTITY,
//!     &CalibrationOptions::default(),
//! )
//! .unwrap();
//! assert!((estimate.scale() - synthetic.truth.gyro.scale).max_abs() < 1e-9);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod cli;
pub mod dataio;
pub mod error;
pub mod sensor_models;
pub mod simulation;
pub mod stats;

pub use calibration::{calibrate_gyroscope, CalibrationOptions, CalibrationSession, ScaleEstimate};
pub use error::{Error, Result};
pub use sensor_models::{AccelParams, GyroParams, Vec3};

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;
