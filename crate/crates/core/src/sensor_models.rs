//! Six-parameter (diagonal scale + bias) error models for the gyroscope and
//! accelerometer, and the small vector type everything is expressed in.
//!
//! The calibration map is `calibrated = scale ∘ raw + bias` for both sensors.
//! Angular rates are in deg/s and accelerations in m/s².

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three-component vector used for accelerations, angular rates and axes.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const ONES: Vec3 = Vec3::new(1.0, 1.0, 1.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub const fn splat(v: f64) -> Self {
        Vec3 { x: v, y: v, z: v }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: Vec3) -> f64 {
        dot(self, other)
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self / n)
    }

    pub fn component_mul(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x * o.x, self.y * o.y, self.z * o.z)
    }

    pub fn component_div(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x / o.x, self.y / o.y, self.z / o.z)
    }

    pub fn map(self, f: impl Fn(f64) -> f64) -> Vec3 {
        Vec3::new(f(self.x), f(self.y), f(self.z))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn min_component(self) -> f64 {
        self.x.min(self.y).min(self.z)
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    /// Arithmetic mean of a slice of vectors; `None` when empty.
    pub fn mean(values: &[Vec3]) -> Option<Vec3> {
        if values.is_empty() {
            return None;
        }
        let sum = values.iter().fold(Vec3::ZERO, |acc, v| acc + *v);
        Some(sum / values.len() as f64)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl fmt::Display for Vec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match f.precision() {
            Some(p) => write!(f, "({:.p$}, {:.p$}, {:.p$})", self.x, self.y, self.z),
            None => write!(f, "({}, {}, {})", self.x, self.y, self.z),
        }
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        Vec3::new(self.x / s, self.y / s, self.z / s)
    }
}

/// `a_x b_x + a_y b_y + a_z b_z`.
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a.x * b.x + a.y * b.y + a.z * b.z
}

/// Gyroscope calibration parameters: `G_calibrated = scale ∘ G_raw + bias`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GyroParams {
    /// Diagonal of the scale-factor matrix (dimensionless).
    pub scale: Vec3,
    /// Additive bias in deg/s.
    pub bias: Vec3,
}

/// Accelerometer calibration parameters: `A_calibrated = scale ∘ A_raw + bias`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelParams {
    pub scale: Vec3,
    /// m/s².
    pub bias: Vec3,
}

fn check_params(kind: &str, scale: Vec3, bias: Vec3) -> Result<()> {
    if !scale.is_finite() || !bias.is_finite() {
        return Err(Error::InvalidParams(format!("{kind} parameters must be finite")));
    }
    if scale.min_component() <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "{kind} scale components must be strictly positive, got {scale}"
        )));
    }
    Ok(())
}

impl GyroParams {
    pub const IDENTITY: GyroParams = GyroParams {
        scale: Vec3::ONES,
        bias: Vec3::ZERO,
    };

    pub fn new(scale: Vec3, bias: Vec3) -> Result<Self> {
        let p = GyroParams { scale, bias };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_params("gyroscope", self.scale, self.bias)
    }
}

impl Default for GyroParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl AccelParams {
    pub const IDENTITY: AccelParams = AccelParams {
        scale: Vec3::ONES,
        bias: Vec3::ZERO,
    };

    pub fn new(scale: Vec3, bias: Vec3) -> Result<Self> {
        let p = AccelParams { scale, bias };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_params("accelerometer", self.scale, self.bias)
    }
}

impl Default for AccelParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

pub fn apply_gyro_calibration(params: &GyroParams, raw: Vec3) -> Vec3 {
    params.scale.component_mul(raw) + params.bias
}

/// Inverse of [`apply_gyro_calibration`]: the raw reading a sensor with these
/// parameters produces for `true_rate`.
pub fn distort_gyro(params: &GyroParams, true_rate: Vec3) -> Result<Vec3> {
    inverse_map("gyroscope", params.scale, params.bias, true_rate)
}

pub fn apply_accel_calibration(params: &AccelParams, raw: Vec3) -> Vec3 {
    params.scale.component_mul(raw) + params.bias
}

/// Inverse of [`apply_accel_calibration`].
pub fn distort_accel(params: &AccelParams, true_accel: Vec3) -> Result<Vec3> {
    inverse_map("accelerometer", params.scale, params.bias, true_accel)
}

fn inverse_map(kind: &str, scale: Vec3, bias: Vec3, v: Vec3) -> Result<Vec3> {
    if scale.x == 0.0 || scale.y == 0.0 || scale.z == 0.0 {
        return Err(Error::InvalidParams(format!("{kind} scale has a zero component")));
    }
    Ok((v - bias).component_div(scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn gyro_calibration_examples() {
        let id = GyroParams::IDENTITY;
        assert_eq!(
            apply_gyro_calibration(&id, Vec3::new(5.0, -3.0, 2.0)),
            Vec3::new(5.0, -3.0, 2.0)
        );

        let p = GyroParams::new(Vec3::new(1.1, 0.9, 1.2), Vec3::ZERO).unwrap();
        assert!(close(
            apply_gyro_calibration(&p, Vec3::splat(10.0)),
            Vec3::new(11.0, 9.0, 12.0),
            1e-12
        ));

        let p = GyroParams::new(Vec3::splat(2.0), Vec3::ONES).unwrap();
        assert_eq!(apply_gyro_calibration(&p, Vec3::ZERO), Vec3::ONES);
    }

    #[test]
    fn distort_examples() {
        let id = GyroParams::IDENTITY;
        assert_eq!(distort_gyro(&id, Vec3::splat(7.0)).unwrap(), Vec3::splat(7.0));

        let p = GyroParams::new(Vec3::new(1.1, 0.9, 1.2), Vec3::ZERO).unwrap();
        let raw = distort_gyro(&p, Vec3::new(11.0, 9.0, 12.0)).unwrap();
        assert!(close(raw, Vec3::splat(10.0), 1e-12));
    }

    #[test]
    fn distort_rejects_zero_scale() {
        let p = GyroParams {
            scale: Vec3::new(1.0, 0.0, 1.0),
            bias: Vec3::ZERO,
        };
        assert!(matches!(distort_gyro(&p, Vec3::ONES), Err(Error::InvalidParams(_))));
        assert!(GyroParams::new(Vec3::new(1.0, -1.0, 1.0), Vec3::ZERO).is_err());
    }

    #[test]
    fn accel_calibration_examples() {
        let id = AccelParams::IDENTITY;
        assert_eq!(
            apply_accel_calibration(&id, Vec3::new(0.0, 0.0, 9.81)),
            Vec3::new(0.0, 0.0, 9.81)
        );

        let p = AccelParams::new(Vec3::new(1.05, 0.95, 1.0), Vec3::ZERO).unwrap();
        assert_eq!(apply_accel_calibration(&p, Vec3::ONES), Vec3::new(1.05, 0.95, 1.0));

        let p = AccelParams::new(Vec3::ONES, Vec3::new(0.005, -0.005, 0.0)).unwrap();
        assert_eq!(apply_accel_calibration(&p, Vec3::ZERO), Vec3::new(0.005, -0.005, 0.0));
    }

    #[test]
    fn dot_examples() {
        assert_eq!(dot(Vec3::Z, Vec3::new(0.0, 0.0, 10.0)), 10.0);
        assert_eq!(dot(Vec3::X, Vec3::Y), 0.0);
        assert_eq!(dot(Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)), 32.0);
    }

    #[test]
    fn serde_as_array() {
        #[derive(Serialize, Deserialize)]
        struct W {
            v: Vec3,
        }
        let w: W = toml::from_str("v = [1.0, 2.0, 3.5]").unwrap();
        assert_eq!(w.v, Vec3::new(1.0, 2.0, 3.5));
    }

    fn vec3(range: std::ops::Range<f64>) -> impl Strategy<Value = Vec3> {
        (range.clone(), range.clone(), range).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    fn gyro_params() -> impl Strategy<Value = GyroParams> {
        (vec3(0.5..1.5), vec3(-5.0..5.0)).prop_map(|(scale, bias)| GyroParams { scale, bias })
    }

    proptest! {
        #[test]
        fn calibration_round_trip(p in gyro_params(), v in vec3(-500.0..500.0)) {
            let back = apply_gyro_calibration(&p, distort_gyro(&p, v).unwrap());
            let tol = 1e-12 * v.max_abs().max(1.0);
            prop_assert!(close(back, v, tol), "{back} vs {v}");
        }

        #[test]
        fn calibration_is_affine(
            p in gyro_params(),
            u in vec3(-100.0..100.0),
            v in vec3(-100.0..100.0),
            a in -3.0..3.0f64,
            b in -3.0..3.0f64,
        ) {
            let lin = |w: Vec3| apply_gyro_calibration(&p, w) - p.bias;
            let lhs = lin(u * a + v * b);
            let rhs = lin(u) * a + lin(v) * b;
            prop_assert!(close(lhs, rhs, 1e-12 * (lhs.max_abs() + 1.0) * 10.0));
        }

        #[test]
        fn dot_is_symmetric_bilinear(
            a in vec3(-10.0..10.0),
            b in vec3(-10.0..10.0),
            c in vec3(-10.0..10.0),
            s in -5.0..5.0f64,
        ) {
            prop_assert_eq!(dot(a, b), dot(b, a));
            prop_assert!(dot(a, a) >= 0.0);
            let lhs = dot(a * s + c, b);
            let rhs = s * dot(a, b) + dot(c, b);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (lhs.abs() + 1.0));
        }
    }
}
