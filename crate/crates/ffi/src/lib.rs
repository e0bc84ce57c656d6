//! C interface to `gyrocal`.
//!
//! Every fallible function returns a [`GyrocalStatus`]; on failure the message
//! is kept per thread and can be copied out with [`gyrocal_last_error`].
//! Objects crossing the boundary are opaque handles released by their own
//! `*_free` function. Panics never unwind into C; they surface as
//! [`GyrocalStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::os::raw::c_int;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use gyrocal::calibration::{calibrate_gyroscope, AccelCalibration, CalibrationOptions, CalibrationSession};
use gyrocal::dataio::{read_session, read_sim_config, write_session};
use gyrocal::sensor_models::apply_gyro_calibration;
use gyrocal::simulation::{
    run_monte_carlo_with, substream, MonteCarloOptions, MonteCarloReport, SessionGenerator, SimConfig,
};
use gyrocal::stats::{summarize, SummaryStats};
use gyrocal::{AccelParams, Error, GyroParams, Vec3};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GyrocalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    DegenerateGeometry = 6,
    NotObservable = 7,
    SignResolution = 8,
    NoStaticData = 9,
    NotConverged = 10,
    TooManyFailures = 11,
    Panic = 12,
}

/// How accelerometer readings are corrected before gyroscope calibration.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GyrocalAccelMode {
    Identity = 0,
    /// Fit scale and bias to the session's static accelerometer poses.
    Fit = 1,
    /// Use the parameters passed alongside.
    Known = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GyrocalVec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Per-axis scale and bias. Gyroscope bias is in deg/s, accelerometer bias in m/s^2.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GyrocalParams {
    pub scale: GyrocalVec3,
    pub bias: GyrocalVec3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GyrocalEstimate {
    pub params: GyrocalParams,
    pub beta_hat: GyrocalVec3,
    /// Recovered gravity/rate dot product, deg/s.
    pub l: f64,
    pub zero_rate_offset: GyrocalVec3,
    pub accel: GyrocalParams,
    pub residual_norm: f64,
    pub normal_equation_residual: f64,
    pub condition_number: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GyrocalSummary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    /// Non-zero when fewer than two values or zero spread.
    pub degenerate: c_int,
}

/// Scale-factor estimate and error statistics of one axis of a Monte-Carlo battery.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GyrocalAxisSummary {
    pub estimate: GyrocalSummary,
    pub error: GyrocalSummary,
    pub mean_abs_error: f64,
}

pub struct GyrocalSession(CalibrationSession);

pub struct GyrocalSimConfig(SimConfig);

pub struct GyrocalMonteCarlo(MonteCarloReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GyrocalStatus {
    match e {
        Error::InvalidParams(_) | Error::InvalidInput(_) | Error::InvalidSession(_) => GyrocalStatus::InvalidArgument,
        Error::NoStaticData => GyrocalStatus::NoStaticData,
        Error::DegenerateGeometry { .. } => GyrocalStatus::DegenerateGeometry,
        Error::RotationNotObservable { .. } => GyrocalStatus::NotObservable,
        Error::SignResolution => GyrocalStatus::SignResolution,
        Error::NotConverged { .. } => GyrocalStatus::NotConverged,
        Error::Config(_) => GyrocalStatus::Config,
        Error::Parse { .. } => GyrocalStatus::Parse,
        Error::Io { .. } => GyrocalStatus::Io,
        Error::TooManyFailures { .. } => GyrocalStatus::TooManyFailures,
    }
}

struct Failure(GyrocalStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(GyrocalStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(GyrocalStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> GyrocalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GyrocalStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            GyrocalStatus::Panic
        }
    }
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid("path is not valid UTF-8"))?;
    Ok(PathBuf::from(s))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

impl From<Vec3> for GyrocalVec3 {
    fn from(v: Vec3) -> Self {
        GyrocalVec3 { x: v.x, y: v.y, z: v.z }
    }
}

impl From<GyrocalVec3> for Vec3 {
    fn from(v: GyrocalVec3) -> Self {
        Vec3::new(v.x, v.y, v.z)
    }
}

impl From<GyroParams> for GyrocalParams {
    fn from(p: GyroParams) -> Self {
        GyrocalParams {
            scale: p.scale.into(),
            bias: p.bias.into(),
        }
    }
}

impl From<AccelParams> for GyrocalParams {
    fn from(p: AccelParams) -> Self {
        GyrocalParams {
            scale: p.scale.into(),
            bias: p.bias.into(),
        }
    }
}

impl From<SummaryStats> for GyrocalSummary {
    fn from(s: SummaryStats) -> Self {
        GyrocalSummary {
            n: s.n,
            mean: s.mean,
            variance: s.variance,
            skewness: s.skewness,
            excess_kurtosis: s.excess_kurtosis,
            min: s.min,
            max: s.max,
            range: s.range,
            degenerate: c_int::from(s.degenerate),
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gyrocal_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's most recent error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the buffer size needed for the
/// whole message, or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to at least `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Reads a session file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_session_read(path: *const c_char, out: *mut *mut GyrocalSession) -> GyrocalStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let session = read_session(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(GyrocalSession(session)));
        Ok(())
    })
}

/// Writes a session as one summary row per segment.
///
/// # Safety
/// `session` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_session_write(session: *const GyrocalSession, path: *const c_char) -> GyrocalStatus {
    guard(|| {
        let s = in_arg(session, "session")?;
        write_session(&s.0, &path_arg(path)?)?;
        Ok(())
    })
}

/// Number of calibration poses in `session`, 0 for a null handle.
///
/// # Safety
/// `session` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_session_pose_count(session: *const GyrocalSession) -> usize {
    session.as_ref().map_or(0, |s| s.0.poses.len())
}

/// # Safety
/// `session` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_session_free(session: *mut GyrocalSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Default simulation settings.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_sim_config_default(out: *mut *mut GyrocalSimConfig) -> GyrocalStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(GyrocalSimConfig(SimConfig::default())));
        Ok(())
    })
}

/// Loads simulation settings from a TOML file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_sim_config_read(
    path: *const c_char,
    out: *mut *mut GyrocalSimConfig,
) -> GyrocalStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let config = read_sim_config(&path_arg(path)?)?;
        *out = Box::into_raw(Box::new(GyrocalSimConfig(config)));
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_sim_config_set_seed(config: *mut GyrocalSimConfig, seed: u64) -> GyrocalStatus {
    guard(|| {
        out_arg(config, "config")?.0.seed = seed;
        Ok(())
    })
}

/// Sets the per-sample gyroscope noise deviation on all axes, deg/s.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_sim_config_set_gyro_noise(config: *mut GyrocalSimConfig, sigma: f64) -> GyrocalStatus {
    guard(|| {
        let c = out_arg(config, "config")?;
        let mut next = c.0.clone();
        next.gyro_noise_sigma.0 = Vec3::splat(sigma);
        next.validate()?;
        c.0 = next;
        Ok(())
    })
}

/// # Safety
/// `config` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_sim_config_free(config: *mut GyrocalSimConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Simulates run `run` of the configured battery. The true gyroscope
/// parameters are written to `truth` when it is not null.
///
/// # Safety
/// `config` must come from this library; `out` must be valid for writes;
/// `truth` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_simulate(
    config: *const GyrocalSimConfig,
    run: u64,
    out: *mut *mut GyrocalSession,
    truth: *mut GyrocalParams,
) -> GyrocalStatus {
    guard(|| {
        let config = &in_arg(config, "config")?.0;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let generator = SessionGenerator::new(config)?;
        let s = generator.generate(&mut substream(config.seed, run), Default::default())?;
        if let Some(t) = truth.as_mut() {
            *t = s.truth.gyro.into();
        }
        *out = Box::into_raw(Box::new(GyrocalSession(s.session)));
        Ok(())
    })
}

fn accel_calibration(mode: GyrocalAccelMode, known: *const GyrocalParams) -> Result<AccelCalibration, Failure> {
    Ok(match mode {
        GyrocalAccelMode::Identity => AccelCalibration::Identity,
        GyrocalAccelMode::Fit => AccelCalibration::Fit,
        GyrocalAccelMode::Known => {
            // SAFETY: caller guarantees `known` is null or readable.
            let p = unsafe { in_arg(known, "accel parameters")? };
            AccelCalibration::Known(AccelParams::new(p.scale.into(), p.bias.into())?)
        }
    })
}

/// Estimates gyroscope scale factors and biases from `session`.
///
/// # Safety
/// `session` must come from this library; `accel` must be readable when
/// `mode` is `Known` and is ignored otherwise; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_calibrate(
    session: *const GyrocalSession,
    mode: GyrocalAccelMode,
    accel: *const GyrocalParams,
    out: *mut GyrocalEstimate,
) -> GyrocalStatus {
    guard(|| {
        let session = &in_arg(session, "session")?.0;
        let out = out_arg(out, "out")?;
        let accel_params = accel_calibration(mode, accel)?.resolve(session)?;
        let est = calibrate_gyroscope(session, &accel_params, &CalibrationOptions::default())?;
        *out = GyrocalEstimate {
            params: est.params.into(),
            beta_hat: est.beta_hat.into(),
            l: est.l,
            zero_rate_offset: est.zero_rate_offset.into(),
            accel: accel_params.into(),
            residual_norm: est.residual_norm,
            normal_equation_residual: est.normal_equation_residual,
            condition_number: est.condition_number,
        };
        Ok(())
    })
}

/// Corrects one raw gyroscope reading: `scale * raw + bias`.
///
/// # Safety
/// `params` must be readable and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_apply_gyro(
    params: *const GyrocalParams,
    raw: GyrocalVec3,
    out: *mut GyrocalVec3,
) -> GyrocalStatus {
    guard(|| {
        let p = in_arg(params, "params")?;
        let out = out_arg(out, "out")?;
        let params = GyroParams::new(p.scale.into(), p.bias.into())?;
        *out = apply_gyro_calibration(&params, raw.into()).into();
        Ok(())
    })
}

/// Descriptive statistics of `len` values.
///
/// # Safety
/// `data` must point to `len` readable doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_summarize(data: *const f64, len: usize, out: *mut GyrocalSummary) -> GyrocalStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let out = out_arg(out, "out")?;
        let values = std::slice::from_raw_parts(data, len);
        *out = summarize(values)?.into();
        Ok(())
    })
}

/// Runs a Monte-Carlo battery. `threads` of 0 uses all available cores.
///
/// # Safety
/// `config` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_montecarlo_run(
    config: *const GyrocalSimConfig,
    runs: usize,
    threads: usize,
    mode: GyrocalAccelMode,
    out: *mut *mut GyrocalMonteCarlo,
) -> GyrocalStatus {
    guard(|| {
        let config = &in_arg(config, "config")?.0;
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if mode == GyrocalAccelMode::Known {
            return Err(invalid(
                "Monte-Carlo batteries accept identity or fit accelerometer modes",
            ));
        }
        let options = MonteCarloOptions {
            threads: (threads > 0).then_some(threads),
            accel_calibration: accel_calibration(mode, ptr::null())?,
            ..MonteCarloOptions::default()
        };
        let report = run_monte_carlo_with(config, runs, &options)?;
        *out = Box::into_raw(Box::new(GyrocalMonteCarlo(report)));
        Ok(())
    })
}

/// Statistics of axis 0, 1 or 2 (x, y, z).
///
/// # Safety
/// `report` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_montecarlo_axis(
    report: *const GyrocalMonteCarlo,
    axis: usize,
    out: *mut GyrocalAxisSummary,
) -> GyrocalStatus {
    guard(|| {
        let report = &in_arg(report, "report")?.0;
        let out = out_arg(out, "out")?;
        let a = report
            .axes
            .get(axis)
            .ok_or_else(|| invalid(format!("axis must be 0, 1 or 2, got {axis}")))?;
        *out = GyrocalAxisSummary {
            estimate: a.estimate.into(),
            error: a.error.into(),
            mean_abs_error: a.mean_abs_error,
        };
        Ok(())
    })
}

/// Number of failed runs in the battery, 0 for a null handle.
///
/// # Safety
/// `report` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_montecarlo_failures(report: *const GyrocalMonteCarlo) -> usize {
    report.as_ref().map_or(0, |r| r.0.failures)
}

/// # Safety
/// `report` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gyrocal_montecarlo_free(report: *mut GyrocalMonteCarlo) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
