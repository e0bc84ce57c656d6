use std::ops::Mul;

use rand::Rng;

use crate::error::{Error, Result};
use crate::sensor_models::Vec3;

/// Tolerance on |q| − 1 accepted by [`rotate_vector`].
pub const UNIT_TOLERANCE: f64 = 1e-6;

/// Rotation quaternion `w + xi + yj + zk` (Hamilton convention, active rotation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    /// Rotation by `angle` radians about `axis` (normalised internally).
    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Result<Self> {
        let axis = axis
            .normalized()
            .ok_or_else(|| Error::InvalidInput("rotation axis must be non-zero".into()))?;
        let (s, c) = (angle / 2.0).sin_cos();
        Ok(Quaternion::new(c, axis.x * s, axis.y * s, axis.z * s))
    }

    /// Shortest rotation taking unit direction `from` onto `to`.
    pub fn between(from: Vec3, to: Vec3) -> Result<Self> {
        let (Some(a), Some(b)) = (from.normalized(), to.normalized()) else {
            return Err(Error::InvalidInput("cannot align a zero vector".into()));
        };
        let d = a.dot(b);
        if d < -1.0 + 1e-12 {
            // Antiparallel: half turn about any perpendicular axis.
            let helper = if a.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
            return Quaternion::from_axis_angle(a.cross(helper), std::f64::consts::PI);
        }
        let c = a.cross(b);
        Ok(Quaternion::new(1.0 + d, c.x, c.y, c.z).normalize())
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalize(self) -> Self {
        let n = self.norm();
        Quaternion::new(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn conjugate(self) -> Self {
        Quaternion::new(self.w, -self.x, -self.y, -self.z)
    }

    fn vector(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Rotation without the unit-norm check, for internally constructed quaternions.
    pub(crate) fn rotate_unchecked(&self, v: Vec3) -> Vec3 {
        // v' = v + 2w (u × v) + 2 u × (u × v)
        let u = self.vector();
        let t = u.cross(v) * 2.0;
        v + t * self.w + u.cross(t)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, r: Quaternion) -> Quaternion {
        Quaternion::new(
            self.w * r.w - self.x * r.x - self.y * r.y - self.z * r.z,
            self.w * r.x + self.x * r.w + self.y * r.z - self.z * r.y,
            self.w * r.y - self.x * r.z + self.y * r.w + self.z * r.x,
            self.w * r.z + self.x * r.y - self.y * r.x + self.z * r.w,
        )
    }
}

pub fn rotate_vector(q: &Quaternion, v: Vec3) -> Result<Vec3> {
    let n = q.norm();
    if !((n - 1.0).abs() <= UNIT_TOLERANCE) {
        return Err(Error::InvalidInput(format!("quaternion norm {n} is not unit")));
    }
    Ok(q.rotate_unchecked(v))
}

/// Uniformly distributed orientation (Shoemake's subgroup algorithm).
pub fn random_orientation<R: Rng + ?Sized>(rng: &mut R) -> Quaternion {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let u3: f64 = rng.random();
    let tau = std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    Quaternion::new(
        b * (tau * u3).cos(),
        a * (tau * u2).sin(),
        a * (tau * u2).cos(),
        b * (tau * u3).sin(),
    )
    .normalize()
}

/// One rotor pose: the installation `mounting` followed by a uniformly random
/// turn about the body-frame rotation `axis`. The world-frame image of the axis
/// is the same for every pose drawn with the same mounting.
pub fn random_pose<R: Rng + ?Sized>(rng: &mut R, mounting: &Quaternion, axis: Vec3) -> Result<Quaternion> {
    let angle = rng.random::<f64>() * std::f64::consts::TAU;
    Ok(*mounting * Quaternion::from_axis_angle(axis, angle)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: Vec3, b: Vec3) -> bool {
        (a - b).max_abs() < 1e-12
    }

    #[test]
    fn rotation_examples() {
        let q = Quaternion::from_axis_angle(Vec3::X, PI).unwrap();
        assert!(close(rotate_vector(&q, Vec3::Z).unwrap(), -Vec3::Z));

        let v = Vec3::new(0.3, -2.0, 7.0);
        assert_eq!(rotate_vector(&Quaternion::IDENTITY, v).unwrap(), v);

        let q = Quaternion::from_axis_angle(Vec3::Z, FRAC_PI_2).unwrap();
        assert!(close(rotate_vector(&q, Vec3::X).unwrap(), Vec3::Y));
    }

    #[test]
    fn rejects_non_unit() {
        let q = Quaternion::new(1.0, 0.1, 0.0, 0.0);
        assert!(rotate_vector(&q, Vec3::X).is_err());
        let q = Quaternion::new(1.0 + 1e-7, 0.0, 0.0, 0.0);
        assert!(rotate_vector(&q, Vec3::X).is_ok());
    }

    #[test]
    fn composition_matches_sequential_rotation() {
        let a = Quaternion::from_axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.7).unwrap();
        let b = Quaternion::from_axis_angle(Vec3::new(-1.0, 0.5, 0.0), 1.9).unwrap();
        let v = Vec3::new(0.2, 0.4, -0.9);
        let seq = rotate_vector(&a, rotate_vector(&b, v).unwrap()).unwrap();
        assert!(close(rotate_vector(&(a * b), v).unwrap(), seq));
    }

    #[test]
    fn between_aligns() {
        for (from, to) in [
            (Vec3::X, Vec3::Y),
            (Vec3::new(0.3, 0.4, 0.5), Vec3::new(-1.0, 0.2, 0.1)),
            (Vec3::Z, -Vec3::Z),
            (Vec3::Y, Vec3::Y),
        ] {
            let q = Quaternion::between(from, to).unwrap();
            let got = rotate_vector(&q, from.normalized().unwrap()).unwrap();
            assert!(close(got, to.normalized().unwrap()), "{from} -> {to}: {got}");
        }
    }

    #[test]
    fn random_pose_is_deterministic() {
        let m = Quaternion::from_axis_angle(Vec3::new(1.0, 1.0, 0.0), 0.4).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(7);
        let mut r2 = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(
            random_pose(&mut r1, &m, Vec3::Z).unwrap(),
            random_pose(&mut r2, &m, Vec3::Z).unwrap()
        );
    }

    #[test]
    fn random_pose_keeps_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mounting = random_orientation(&mut rng);
        let world_axis = rotate_vector(&mounting, Vec3::Z).unwrap();
        for _ in 0..1000 {
            let q = random_pose(&mut rng, &mounting, Vec3::Z).unwrap();
            // Axis in the body frame is the rotation axis itself; its world image is fixed.
            let body_axis = rotate_vector(&q.conjugate(), world_axis).unwrap();
            assert!(close(body_axis, Vec3::Z), "{body_axis}");
        }
    }

    #[test]
    fn random_orientation_is_uniform() {
        // Uniform orientations map a fixed vector to a uniform point on the
        // sphere: each coordinate has mean 0 and variance 1/3.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 10_000;
        let zs: Vec<f64> = (0..n)
            .map(|_| {
                let q = random_orientation(&mut rng);
                rotate_vector(&q.conjugate(), Vec3::Z).unwrap().z
            })
            .collect();
        let mean = zs.iter().sum::<f64>() / n as f64;
        let var = zs.iter().map(|z| (z - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.02, "{var}");
    }

    proptest! {
        #[test]
        fn rotation_preserves_norm(
            ax in -1.0..1.0f64, ay in -1.0..1.0f64, az in 0.1..1.0f64,
            angle in -10.0..10.0f64,
            vx in -100.0..100.0f64, vy in -100.0..100.0f64, vz in -100.0..100.0f64,
        ) {
            let q = Quaternion::from_axis_angle(Vec3::new(ax, ay, az), angle).unwrap();
            let v = Vec3::new(vx, vy, vz);
            let r = rotate_vector(&q, v).unwrap();
            prop_assert!((r.norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
        }
    }
}
