//! Principal logarithm of a 3×3 rotation matrix.

use super::Mat3;
use crate::error::{LieError, Result};

/// Tolerance for accepting a matrix as a rotation in [`rot_log`].
pub const ROTATION_TOL: f64 = 1e-8;
/// Below this angle the Rodrigues coefficient is evaluated by its series.
pub const SMALL_ANGLE: f64 = 1e-4;
/// Within this distance of π the axis is read from the symmetric part.
pub const NEAR_PI: f64 = 1e-4;

pub fn is_rotation(p: &Mat3, tol: f64) -> bool {
    p.is_finite()
        && (p.transpose() * *p - Mat3::identity()).frobenius_norm() <= tol
        && (p.det() - 1.0).abs() <= tol
}

/// Returns the skew-symmetric `log(p)` with rotation angle in `[0, π]`.
pub fn rot_log(p: &Mat3) -> Result<Mat3> {
    if !is_rotation(p, ROTATION_TOL) {
        return Err(LieError::Domain("rot_log: input is not a rotation".into()));
    }
    let w = p.vee(); // sin θ · axis
    let sin_theta = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    let cos_theta = 0.5 * (p.trace() - 1.0);
    let theta = sin_theta.atan2(cos_theta);

    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        let c = 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0;
        return Ok(Mat3::skew(&w).scale(c));
    }
    if theta > std::f64::consts::PI - NEAR_PI {
        // (P + Pᵀ)/2 = cos θ · I + (1 − cos θ) · n nᵀ
        let sym = (*p + p.transpose()).scale(0.5);
        let one_minus_cos = 1.0 - cos_theta;
        let outer = Mat3::from_fn(|i, j| {
            let d = if i == j { cos_theta } else { 0.0 };
            (sym[(i, j)] - d) / one_minus_cos
        });
        let k = (0..3)
            .max_by(|&a, &b| outer[(a, a)].total_cmp(&outer[(b, b)]))
            .unwrap_or(0);
        let col = outer.column(k);
        let norm = (col[0] * col[0] + col[1] * col[1] + col[2] * col[2]).sqrt();
        let mut axis = col.map(|c| c / norm);
        if axis[0] * w[0] + axis[1] * w[1] + axis[2] * w[2] < 0.0 {
            axis = axis.map(|a| -a);
        }
        return Ok(Mat3::skew(&axis.map(|a| a * theta)));
    }
    Ok(Mat3::skew(&w).scale(theta / sin_theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mat_exp;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn axis_angle(axis: [f64; 3], theta: f64) -> Mat3 {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        mat_exp(&Mat3::skew(&axis.map(|a| a * theta / n))).unwrap()
    }

    #[test]
    fn identity_log_is_zero() {
        assert_eq!(rot_log(&Mat3::identity()).unwrap(), Mat3::zeros());
    }

    #[test]
    fn quarter_turn() {
        let l = rot_log(&Mat3::rot_z(FRAC_PI_2)).unwrap();
        let k = Mat3::skew(&[0.0, 0.0, FRAC_PI_2]);
        assert!((l - k).frobenius_norm() < 1e-14);
    }

    #[test]
    fn half_turn_branch() {
        let l = rot_log(&Mat3::from_diagonal(&[1.0, -1.0, -1.0])).unwrap();
        assert!((l.frobenius_norm_sq() - 2.0 * PI * PI).abs() < 1e-12);
        assert!(
            (mat_exp(&l).unwrap() - Mat3::from_diagonal(&[1.0, -1.0, -1.0])).frobenius_norm()
                < 1e-12
        );
    }

    #[test]
    fn roundtrip_across_branches() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for theta in [
            1e-9,
            1e-5,
            0.5e-4,
            2e-4,
            0.3,
            2.0,
            PI - 1e-3,
            PI - 5e-5,
            PI - 1e-7,
        ] {
            for _ in 0..50 {
                let axis = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                let p = axis_angle(axis, theta);
                let l = rot_log(&p).unwrap();
                assert!(
                    (mat_exp(&l).unwrap() - p).frobenius_norm() <= 1e-10,
                    "theta {theta}"
                );
                assert!((0.5 * l.frobenius_norm_sq()).sqrt() <= PI + 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_rotation() {
        assert!(rot_log(&Mat3::from_diagonal(&[1.0, 1.0, -1.0])).is_err());
        assert!(rot_log(&Mat3::identity().scale(1.1)).is_err());
    }
}
