//! Accelerometer pre-calibration by fitting static readings to the gravity sphere.
//!
//! Minimises `Σ (|s ∘ A_k + d|² / g² − 1)²` over per-axis scale `s` and bias `d`
//! with damped Gauss-Newton, starting from the identity.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::sensor_models::{AccelParams, Vec3};

pub const MIN_ACCEL_POSES: usize = 6;
const STEP_TOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 100;
const MAX_CONDITION: f64 = 1e12;

type Mat6 = SMatrix<f64, 6, 6>;
type Vec6 = SVector<f64, 6>;

fn params_of(p: &Vec6) -> (Vec3, Vec3) {
    (Vec3::new(p[0], p[1], p[2]), Vec3::new(p[3], p[4], p[5]))
}

fn cost(poses: &[Vec3], g2: f64, p: &Vec6) -> f64 {
    let (s, d) = params_of(p);
    poses
        .iter()
        .map(|a| {
            let c = s.component_mul(*a) + d;
            (c.dot(c) / g2 - 1.0).powi(2)
        })
        .sum()
}

/// Returns `(JᵀJ, Jᵀr)`.
fn normal_system(poses: &[Vec3], g2: f64, p: &Vec6) -> (Mat6, Vec6) {
    let (s, d) = params_of(p);
    let mut jtj = Mat6::zeros();
    let mut jtr = Vec6::zeros();
    for a in poses {
        let c = s.component_mul(*a) + d;
        let r = c.dot(c) / g2 - 1.0;
        let (c, a) = (c.to_array(), a.to_array());
        let mut row = Vec6::zeros();
        for j in 0..3 {
            row[j] = 2.0 * c[j] * a[j] / g2;
            row[j + 3] = 2.0 * c[j] / g2;
        }
        jtj += row * row.transpose();
        jtr += row * r;
    }
    (jtj, jtr)
}

fn condition(m: &Mat6) -> f64 {
    let sv = m.symmetric_eigenvalues();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Fits the accelerometer calibration from raw static means at distinct poses.
pub fn fit_accel_params(poses: &[Vec3], gravity: f64) -> Result<AccelParams> {
    if !(gravity > 0.0) {
        return Err(Error::InvalidInput(format!(
            "gravity magnitude must be positive, got {gravity}"
        )));
    }
    if poses.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidInput("non-finite accelerometer pose".into()));
    }
    if poses.len() < MIN_ACCEL_POSES {
        return Err(Error::DegenerateGeometry {
            condition: f64::INFINITY,
        });
    }
    let g2 = gravity * gravity;
    let mut p = Vec6::from_column_slice(&[1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    let mut current = cost(poses, g2, &p);

    for _ in 0..MAX_ITERATIONS {
        let (jtj, jtr) = normal_system(poses, g2, &p);
        let cond = condition(&jtj);
        if !(cond <= MAX_CONDITION) {
            return Err(Error::DegenerateGeometry { condition: cond });
        }
        let step = jtj
            .cholesky()
            .ok_or(Error::DegenerateGeometry { condition: cond })?
            .solve(&(-jtr));

        // Backtrack until the cost does not increase.
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let candidate = p + step * t;
            let c = cost(poses, g2, &candidate);
            if c <= current {
                accepted = Some((candidate, c));
                break;
            }
            t *= 0.5;
        }
        let Some((next, c)) = accepted else {
            // No descent direction left: at the minimum to round-off.
            break;
        };
        let step_norm = (next - p).norm();
        p = next;
        current = c;
        if step_norm < STEP_TOL {
            let (scale, bias) = params_of(&p);
            return AccelParams::new(scale, bias);
        }
    }

    // Either converged through the backtracking exit or ran out of iterations;
    // accept only if the gradient vanished.
    let (jtj, jtr) = normal_system(poses, g2, &p);
    let newton = jtj.cholesky().map(|c| c.solve(&jtr).norm()).unwrap_or(f64::INFINITY);
    if newton < STEP_TOL {
        let (scale, bias) = params_of(&p);
        AccelParams::new(scale, bias)
    } else {
        Err(Error::NotConverged {
            iterations: MAX_ITERATIONS,
            residual: current.sqrt(),
        })
    }
}
