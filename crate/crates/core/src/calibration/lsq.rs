//! Design matrix, the unit-right-hand-side least-squares solve, and recovery of
//! the dot-product constant from the known rotor speed.

use log::debug;
use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::sensor_models::Vec3;

/// Condition number above which the design matrix is treated as rank deficient.
pub const DEFAULT_MAX_CONDITION: f64 = 1e8;

/// Below this, `|G ∘ β̂|` is taken as zero.
const OBSERVABILITY_EPS: f64 = 1e-12;

/// The n×3 matrix whose row i is `A_i ∘ (G_i − offset)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: Vec<Vec3>,
}

impl DesignMatrix {
    pub fn from_rows(rows: Vec<Vec3>) -> Self {
        DesignMatrix { rows }
    }

    pub fn rows(&self) -> &[Vec3] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows.len(), 3, |i, j| self.rows[i].to_array()[j])
    }

    /// `X v`.
    pub fn apply(&self, v: Vec3) -> Vec<f64> {
        self.rows.iter().map(|r| r.dot(v)).collect()
    }

    /// Ratio of largest to smallest singular value; infinite when rank deficient.
    pub fn condition_number(&self) -> f64 {
        if self.rows.len() < 3 {
            return f64::INFINITY;
        }
        let sv = self.to_matrix().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min <= 0.0 || !min.is_finite() {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// `|Xᵀ(Xβ − 1)| / |Xᵀ1|`, the relative residual of the normal equations.
    pub fn normal_equation_residual(&self, beta: Vec3) -> f64 {
        let mut grad = Vec3::ZERO;
        let mut xt1 = Vec3::ZERO;
        for r in &self.rows {
            grad += *r * (r.dot(beta) - 1.0);
            xt1 += *r;
        }
        grad.norm() / xt1.norm()
    }

    /// `|Xβ − 1|`.
    pub fn residual_norm(&self, beta: Vec3) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.dot(beta) - 1.0).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

pub fn build_design_matrix(accel: &[Vec3], gyro: &[Vec3], offset: Vec3) -> Result<DesignMatrix> {
    if accel.len() != gyro.len() {
        return Err(Error::InvalidInput(format!(
            "{} accelerometer rows vs {} gyroscope rows",
            accel.len(),
            gyro.len()
        )));
    }
    if accel.is_empty() {
        return Err(Error::InvalidInput("design matrix needs at least one pose".into()));
    }
    let rows = accel
        .iter()
        .zip(gyro)
        .map(|(a, g)| a.component_mul(*g - offset))
        .collect();
    Ok(DesignMatrix { rows })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSolution {
    /// Least-squares solution of `Xβ = 1`, i.e. the scale factors divided by L.
    pub beta_hat: Vec3,
    pub condition_number: f64,
    pub residual_norm: f64,
}

/// Least-squares solution of `Xβ = 1` through a thin QR factorisation.
pub fn solve_beta_hat(x: &DesignMatrix, max_condition: f64) -> Result<BetaSolution> {
    let condition = x.condition_number();
    if x.len() < 3 || !(condition <= max_condition) {
        return Err(Error::DegenerateGeometry { condition });
    }
    let m = x.to_matrix();
    let ones = DVector::from_element(x.len(), 1.0);
    let qr = m.qr();
    let rhs = qr.q().transpose() * ones;
    let r = qr.r();
    let beta = r
        .solve_upper_triangular(&rhs)
        .ok_or(Error::DegenerateGeometry { condition })?;
    let beta_hat = Vec3::new(beta[0], beta[1], beta[2]);
    if !beta_hat.is_finite() {
        return Err(Error::DegenerateGeometry { condition });
    }
    let residual_norm = x.residual_norm(beta_hat);
    debug!("beta_hat {beta_hat} cond {condition:.3e} residual {residual_norm:.3e}");
    Ok(BetaSolution {
        beta_hat,
        condition_number: condition,
        residual_norm,
    })
}

/// Literal `(XᵀX)⁻¹Xᵀ1`. Kept as an independent route for cross-checking the
/// QR solve; it squares the condition number, so the pipeline does not use it.
pub fn solve_beta_hat_normal_equations(x: &DesignMatrix) -> Option<Vec3> {
    let mut xtx = nalgebra::Matrix3::<f64>::zeros();
    let mut xt1 = Vector3::<f64>::zeros();
    for r in x.rows() {
        let v = Vector3::new(r.x, r.y, r.z);
        xtx += v * v.transpose();
        xt1 += v;
    }
    let b = xtx.try_inverse()? * xt1;
    Some(Vec3::new(b[0], b[1], b[2]))
}

/// Recovers the dot-product constant L from the rotor speed.
///
/// Each pose gives `L_i = ω_n / |(G_i − offset) ∘ β̂|`; the result is their mean.
/// The quadratic only fixes |L|, so the sign is chosen to make the majority of
/// `β̂ · L` positive.
pub fn recover_l(beta_hat: Vec3, gyro: &[Vec3], offset: Vec3, rotor_speed: f64) -> Result<f64> {
    if !(rotor_speed > 0.0) || !rotor_speed.is_finite() {
        return Err(Error::InvalidInput(format!(
            "rotor speed must be positive, got {rotor_speed}"
        )));
    }
    if gyro.is_empty() {
        return Err(Error::InvalidInput("L recovery needs at least one pose".into()));
    }
    if beta_hat == Vec3::ZERO {
        return Err(Error::InvalidInput("beta_hat is zero".into()));
    }
    let mut sum = 0.0;
    for (i, g) in gyro.iter().enumerate() {
        let denom = (*g - offset).component_mul(beta_hat).norm();
        if !(denom >= OBSERVABILITY_EPS) {
            return Err(Error::RotationNotObservable { pose: i });
        }
        sum += rotor_speed / denom;
    }
    let magnitude = sum / gyro.len() as f64;
    let positive = beta_hat.to_array().iter().filter(|b| **b > 0.0).count();
    Ok(if positive >= 2 { magnitude } else { -magnitude })
}
