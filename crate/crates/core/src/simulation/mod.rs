//! Synthetic calibration sessions and Monte-Carlo batteries.
//!
//! The rotor axis `a` is fixed in the body frame. A mounting rotation places
//! it at a random tilt from the vertical; each pose then turns the body about
//! `a` by some angle. Because the axis is fixed in both frames, the gyroscope
//! reads `a·ω` at every pose while the body-frame gravity direction sweeps a
//! cone around `a`.
//!
//! Two sampling modes are offered. [`Sampling::Rows`] produces every sample of
//! a recording. [`Sampling::Means`] draws each segment mean directly from its
//! exact distribution, which is what the Monte-Carlo batteries use: all noise
//! enters the sensor models affinely, so the mean of `N` samples with
//! per-sample deviation σ is Gaussian with deviation σ/√N.

pub mod config;
mod montecarlo;
mod quaternion;
mod rng;

pub use config::{AccelModel, AxisValue, PoseAngles, SimConfig, UniformBounds};
pub use montecarlo::{
    run_monte_carlo, run_monte_carlo_with, run_noise_sweep, AxisSummary, MonteCarloOptions, MonteCarloReport,
    NoiseLevelReport, RunRecord,
};
pub use quaternion::{random_orientation, random_pose, rotate_vector, Quaternion, UNIT_TOLERANCE};
pub use rng::{substream, BATTERY_STREAM};

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::calibration::{AccelPose, CalibrationSession, PoseObservation, RowMode, SampleMean};
use crate::dataio::{Recording, Row, Segment, SegmentKind};
use crate::error::Result;
use crate::sensor_models::{distort_accel, distort_gyro, AccelParams, GyroParams, Vec3};

/// Smallest absolute component allowed in a randomly drawn rotation axis, so
/// that every gyroscope axis sees a usable share of the rotation.
pub const MIN_AXIS_COMPONENT: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Segment means only.
    #[default]
    Means,
    /// Every sample.
    Rows,
}

/// Ground truth behind a synthetic session.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truth {
    /// Calibration that maps raw gyroscope output to the true rate.
    pub gyro: GyroParams,
    /// Calibration that maps raw accelerometer output to the true specific force.
    pub accel: AccelParams,
    /// Rotor axis in the body frame (unit).
    pub rotation_axis: Vec3,
    /// Angle between the rotor axis and the vertical, radians.
    pub tilt: f64,
    /// Dot product of the unit gravity direction with the nominal rotation rate, deg/s.
    pub true_l: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub session: CalibrationSession,
    pub truth: Truth,
    /// Full recording, present for [`Sampling::Rows`].
    pub recording: Option<Recording>,
}

/// Centrifugal specific force of a point at `lever_arm` (m, body frame) on a
/// body turning at `omega` (deg/s), added to `accel`. The term
/// `ω × (ω × r)` points towards the axis and is orthogonal to `ω`.
pub fn add_centrifugal(accel: Vec3, omega: Vec3, lever_arm: Vec3) -> Vec3 {
    let w = omega.map(f64::to_radians);
    accel + w.cross(w.cross(lever_arm))
}

/// Rotation axis shared by every session of a battery: the configured axis, or
/// one drawn from the battery stream of `config.seed`.
pub fn battery_axis(config: &SimConfig) -> Vec3 {
    if let Some(axis) = config.rotation_axis.and_then(Vec3::normalized) {
        return axis;
    }
    let mut rng = substream(config.seed, BATTERY_STREAM);
    loop {
        let v = Vec3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        if let Some(u) = v.normalized() {
            if u.x.abs() >= MIN_AXIS_COMPONENT && u.y.abs() >= MIN_AXIS_COMPONENT && u.z.abs() >= MIN_AXIS_COMPONENT {
                return u;
            }
        }
    }
}

/// Generates one session with the battery axis of `config`.
pub fn generate_session<R: Rng + ?Sized>(config: &SimConfig, rng: &mut R) -> Result<SyntheticSession> {
    SessionGenerator::new(config)?.generate(rng, Sampling::Means)
}

/// Session factory for a validated configuration and a fixed rotation axis.
#[derive(Debug, Clone)]
pub struct SessionGenerator {
    config: SimConfig,
    axis: Vec3,
}

fn normal3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    )
}

fn uniform3<R: Rng + ?Sized>(rng: &mut R) -> Vec3 {
    Vec3::new(rng.random(), rng.random(), rng.random())
}

/// Mean of `cos` and `sin` over the angles `θ0 + kΔ`, `k = 0..n`.
fn arc_mean(theta0: f64, delta: f64, n: usize) -> (f64, f64) {
    let half = delta / 2.0;
    if n == 1 {
        return (theta0.cos(), theta0.sin());
    }
    if half.sin().abs() < 1e-9 {
        let (mut c, mut s) = (0.0, 0.0);
        for k in 0..n {
            let (sk, ck) = (theta0 + k as f64 * delta).sin_cos();
            c += ck;
            s += sk;
        }
        return (c / n as f64, s / n as f64);
    }
    let ratio = (n as f64 * half).sin() / (n as f64 * half.sin());
    let mid = theta0 + (n - 1) as f64 * half;
    (ratio * mid.cos(), ratio * mid.sin())
}

/// Geometry of one battery member: where gravity points in the body frame.
struct Geometry {
    axis: Vec3,
    /// Body-frame unit "up" at rotor angle 0.
    up0: Vec3,
}

impl Geometry {
    fn up_at(&self, theta: f64) -> Vec3 {
        let par = self.axis * self.axis.dot(self.up0);
        let perp = self.up0 - par;
        let (s, c) = theta.sin_cos();
        par + perp * c - self.axis.cross(perp) * s
    }

    fn up_arc_mean(&self, theta0: f64, delta: f64, n: usize) -> Vec3 {
        let par = self.axis * self.axis.dot(self.up0);
        let perp = self.up0 - par;
        let (c, s) = arc_mean(theta0, delta, n);
        par + perp * c - self.axis.cross(perp) * s
    }
}

impl SessionGenerator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        Ok(SessionGenerator {
            config: config.clone(),
            axis: battery_axis(config),
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn axis(&self) -> Vec3 {
        self.axis
    }

    /// Draws one session. The order of random draws does not depend on any
    /// noise level, so batteries that differ only in noise share their
    /// parameters and geometry.
    pub fn generate<R: Rng + ?Sized>(&self, rng: &mut R, sampling: Sampling) -> Result<SyntheticSession> {
        let c = &self.config;
        let gyro = GyroParams::new(c.gyro_scale.at(uniform3(rng)), c.gyro_bias.at(uniform3(rng)))?;
        let accel_scale = c.accel_scale.at(uniform3(rng));
        let accel_bias = c.accel_bias.at(uniform3(rng));
        let accel = match c.accel_model {
            AccelModel::Ideal => AccelParams::IDENTITY,
            AccelModel::Uniform => AccelParams::new(accel_scale, accel_bias)?,
        };

        let [t0, t1] = c.tilt_deg;
        let tilt = (t0 + rng.random::<f64>() * (t1 - t0)).to_radians();
        let azimuth = rng.random::<f64>() * TAU;
        let world_axis = Vec3::new(tilt.sin() * azimuth.cos(), tilt.sin() * azimuth.sin(), tilt.cos());
        let mounting = Quaternion::between(self.axis, world_axis)?;
        let geometry = Geometry {
            axis: self.axis,
            up0: mounting.conjugate().rotate_unchecked(Vec3::Z),
        };

        let truth = Truth {
            gyro,
            accel,
            rotation_axis: self.axis,
            tilt,
            true_l: c.rotor_speed * tilt.cos(),
        };

        let mut generated = match sampling {
            Sampling::Means => self.means(rng, &truth, &geometry)?,
            Sampling::Rows => self.rows(rng, &truth, &geometry)?,
        };
        generated.truth = truth;
        Ok(generated)
    }

    fn pose_angles<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.config.pose_count;
        let draws: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        match self.config.pose_angles {
            PoseAngles::Random => draws.iter().map(|u| u * TAU).collect(),
            PoseAngles::Even => (0..n).map(|i| (draws[0] + i as f64) / n as f64 * TAU).collect(),
        }
    }

    fn centrifugal(&self) -> Vec3 {
        match self.config.centrifugal_lever_arm {
            Some(r) => add_centrifugal(Vec3::ZERO, self.axis * self.config.rotor_speed, r),
            None => Vec3::ZERO,
        }
    }

    /// Rotor angle advanced per sample, radians.
    fn step(&self) -> f64 {
        self.config.rotor_speed.to_radians() / self.config.sample_rate
    }

    fn means<R: Rng + ?Sized>(&self, rng: &mut R, truth: &Truth, geometry: &Geometry) -> Result<SyntheticSession> {
        let c = &self.config;
        let g = c.gravity;
        let n = c.samples_per_pose;
        let n_static = c.static_samples;
        let sa_static = c.accel_noise_sigma / (n_static as f64).sqrt();
        let sa_rot = c.accel_noise_sigma / (n as f64).sqrt();
        let sg_rot = c.gyro_noise_sigma.0 / (n as f64).sqrt();
        let sg_static = c.gyro_noise_sigma.0 / (n_static as f64).sqrt();
        let s_rotor = c.rotor_noise_fraction * c.rotor_speed / (n as f64).sqrt();
        let f_c = self.centrifugal();

        let angles = self.pose_angles(rng);
        let mut poses = Vec::with_capacity(angles.len());
        for (i, &theta) in angles.iter().enumerate() {
            let static_accel = distort_accel(&truth.accel, geometry.up_at(theta) * g)? + normal3(rng) * sa_static;
            let speed = c.rotor_speed + rng.sample::<f64, _>(StandardNormal) * s_rotor;
            let gyro_mean = distort_gyro(&truth.gyro, self.axis * speed)? + normal3(rng).component_mul(sg_rot);
            let up_mean = geometry.up_arc_mean(theta, self.step(), n);
            let rotating_accel = distort_accel(&truth.accel, up_mean * g + f_c)? + normal3(rng) * sa_rot;
            poses.push(PoseObservation {
                id: i as u32 + 1,
                accel_mean: static_accel,
                accel_count: n_static,
                gyro_mean,
                rotating_accel_mean: rotating_accel,
                sample_count: n,
            });
        }

        let static_gyro = SampleMean {
            mean: distort_gyro(&truth.gyro, Vec3::ZERO)? + normal3(rng).component_mul(sg_static),
            count: n_static,
        };

        let mut accel_only = Vec::with_capacity(c.accel_cal_poses);
        for k in 0..c.accel_cal_poses {
            let q = random_orientation(rng);
            let up = q.conjugate().rotate_unchecked(Vec3::Z);
            accel_only.push(AccelPose {
                id: (c.pose_count + k) as u32 + 1,
                mean: distort_accel(&truth.accel, up * g)? + normal3(rng) * sa_static,
                count: n_static,
            });
        }

        Ok(SyntheticSession {
            session: CalibrationSession {
                poses,
                accel_only,
                rotor_speed: c.rotor_speed,
                gravity: g,
                static_gyro,
            },
            truth: *truth,
            recording: None,
        })
    }

    fn rows<R: Rng + ?Sized>(&self, rng: &mut R, truth: &Truth, geometry: &Geometry) -> Result<SyntheticSession> {
        let c = &self.config;
        let g = c.gravity;
        let sigma_g = c.gyro_noise_sigma.0;
        let sigma_a = c.accel_noise_sigma;
        let s_rotor = c.rotor_noise_fraction * c.rotor_speed;
        let dt = 1.0 / c.sample_rate;
        let f_c = self.centrifugal();
        let gyro_rest = distort_gyro(&truth.gyro, Vec3::ZERO)?;
        let mut t = 0.0;
        let mut clock = || {
            let now = t;
            t += dt;
            now
        };

        // At rest: gyroscope reads its offset, accelerometer reads `up`.
        let rest =
            |rng: &mut R, id: u32, kind: SegmentKind, up: Vec3, clock: &mut dyn FnMut() -> f64| -> Result<Segment> {
                let true_accel = distort_accel(&truth.accel, up * g)?;
                let rows = (0..c.static_samples)
                    .map(|_| Row {
                        t: clock(),
                        gyro: gyro_rest + normal3(rng).component_mul(sigma_g),
                        accel: true_accel + normal3(rng) * sigma_a,
                    })
                    .collect();
                Ok(Segment::new(kind, id, rows))
            };

        let angles = self.pose_angles(rng);
        let mut segments = Vec::new();
        segments.push(rest(rng, 0, SegmentKind::StaticGyro, geometry.up_at(0.0), &mut clock)?);
        for (i, &theta) in angles.iter().enumerate() {
            let id = i as u32 + 1;
            segments.push(rest(
                rng,
                id,
                SegmentKind::StaticAccel,
                geometry.up_at(theta),
                &mut clock,
            )?);
            let mut rows = Vec::with_capacity(c.samples_per_pose);
            for k in 0..c.samples_per_pose {
                let speed = c.rotor_speed + rng.sample::<f64, _>(StandardNormal) * s_rotor;
                let gyro = distort_gyro(&truth.gyro, self.axis * speed)? + normal3(rng).component_mul(sigma_g);
                let up = geometry.up_at(theta + k as f64 * self.step());
                let accel = distort_accel(&truth.accel, up * g + f_c)? + normal3(rng) * sigma_a;
                rows.push(Row {
                    t: clock(),
                    gyro,
                    accel,
                });
            }
            segments.push(Segment::new(SegmentKind::Rotating, id, rows));
        }
        for k in 0..c.accel_cal_poses {
            let q = random_orientation(rng);
            let up = q.conjugate().rotate_unchecked(Vec3::Z);
            let id = (c.pose_count + k) as u32 + 1;
            segments.push(rest(rng, id, SegmentKind::StaticAccel, up, &mut clock)?);
        }

        let recording = Recording {
            rotor_speed: c.rotor_speed,
            gravity: g,
            segments,
        };
        Ok(SyntheticSession {
            session: recording.to_session(RowMode::PerPose)?,
            truth: *truth,
            recording: Some(recording),
        })
    }
}
