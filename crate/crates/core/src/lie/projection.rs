//! Closed-form nearest rotation and the rotation angle.

use super::types::{Rotation3, TangentVector};
use crate::error::{LieError, Result};
use crate::linalg::{rot_log, svd3, Mat3, Svd3};

/// Relative margin below which the nearest rotation is considered non-unique.
pub const UNIQUENESS_TOL: f64 = 1e-12;

/// The nearest rotation together with the factorisation it was built from.
#[derive(Clone, Copy, Debug)]
pub struct So3Projection {
    pub rotation: Rotation3,
    pub svd: Svd3,
    /// `det(U Vᵀ)`, either +1 or −1.
    pub sign: f64,
}

impl So3Projection {
    /// Singular values with the last one multiplied by `sign`.
    pub fn signed_sigma(&self) -> [f64; 3] {
        [
            self.svd.sigma[0],
            self.svd.sigma[1],
            self.sign * self.svd.sigma[2],
        ]
    }

    /// Derivative of `tr(P)` with respect to the projected matrix.
    ///
    /// With `C = Uᵀ dM V`, the perturbation of `P = U D Vᵀ` is `U W Vᵀ` where
    /// `W_ij = (C_ij − d_i d_j C_ji) / (ŝ_i + ŝ_j)` off the diagonal and zero on
    /// it, `ŝ = D Σ`. The denominators stay positive whenever the projection
    /// is unique, so coincident singular values need no special treatment.
    pub fn trace_gradient(&self) -> Mat3 {
        let d = [1.0, 1.0, self.sign];
        let s = self.signed_sigma();
        let q = self.svd.v.transpose() * self.svd.u;
        let g = Mat3::from_fn(|i, j| {
            if i == j {
                0.0
            } else {
                (q[(j, i)] - d[i] * d[j] * q[(i, j)]) / (s[i] + s[j])
            }
        });
        self.svd.u * g * self.svd.v.transpose()
    }
}

/// Projects `m` onto SO(3): `P = U diag(1, 1, det(U Vᵀ)) Vᵀ`.
///
/// Fails with [`LieError::DegenerateProjection`] when
/// `σ₂ + det(U Vᵀ)·σ₃` is not positive, where the minimiser is not unique.
pub fn project_so3_full(m: &Mat3) -> Result<So3Projection> {
    let svd = svd3(m)?;
    let sign = if svd.u.det() * svd.v.det() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let margin = svd.sigma[1] + sign * svd.sigma[2];
    if !(margin > UNIQUENESS_TOL * svd.sigma[0]) {
        return Err(LieError::DegenerateProjection { margin });
    }
    let p = svd.u * Mat3::from_diagonal(&[1.0, 1.0, sign]) * svd.v.transpose();
    Ok(So3Projection {
        rotation: Rotation3::from_orthonormal(p),
        svd,
        sign,
    })
}

pub fn project_so3(m: &Mat3) -> Result<Rotation3> {
    project_so3_full(m).map(|p| p.rotation)
}

/// `θ = arccos((tr P − 1)/2) ∈ [0, π]`.
///
/// Evaluated as `atan2(sin θ, cos θ)` with `sin θ` read off the
/// antisymmetric part, which keeps full relative accuracy near 0 and π.
pub fn rotation_angle(p: &Rotation3) -> f64 {
    let (sin, cos) = sin_cos(p.matrix());
    sin.atan2(cos)
}

/// `(sin θ, cos θ)` of a rotation matrix, with `cos θ` clamped to `[−1, 1]`.
pub(crate) fn sin_cos(p: &Mat3) -> (f64, f64) {
    let w = p.vee();
    let sin = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
    (sin, (0.5 * (p.trace() - 1.0)).clamp(-1.0, 1.0))
}

/// Principal logarithm of a rotation.
pub fn rotation_log(p: &Rotation3) -> Result<TangentVector> {
    rot_log(p.matrix()).map(|l| TangentVector::project(&l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn rotation_is_fixed() {
        let r = Mat3::rot_z(0.8)
            * Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 0.6, -0.8], [0.0, 0.8, 0.6]]);
        let p = project_so3(&r).unwrap();
        assert!((*p.matrix() - r).frobenius_norm() < 1e-10);
    }

    #[test]
    fn spd_projects_to_identity() {
        let p = project_so3(&Mat3::from_diagonal(&[2.0, 0.5, 1.0])).unwrap();
        assert!((*p.matrix() - Mat3::identity()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn polar_factor() {
        let s = Mat3::from_diagonal(&[1.1, 1.0 / 1.1, 1.0]);
        let p = project_so3(&(Mat3::rot_z(0.3) * s)).unwrap();
        assert!((*p.matrix() - Mat3::rot_z(0.3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn reflection_degenerate() {
        let m = Mat3::from_diagonal(&[1.0, 1.0, -1.0]);
        assert!(matches!(
            project_so3(&m),
            Err(LieError::DegenerateProjection { .. })
        ));
        assert!(project_so3(&Mat3::zeros()).is_err());
    }

    #[test]
    fn negative_det_unique_case() {
        // det < 0 but σ₂ > σ₃: projection flips the weakest direction.
        let m = Mat3::from_diagonal(&[2.0, 1.0, -0.5]);
        let p = project_so3(&m).unwrap();
        assert!((*p.matrix() - Mat3::identity()).frobenius_norm() < 1e-12);
    }

    #[test]
    fn angles() {
        assert_eq!(rotation_angle(&Rotation3::identity()), 0.0);
        assert!((rotation_angle(&Rotation3::rot_z(FRAC_PI_2)) - FRAC_PI_2).abs() < 1e-15);
        let half = Rotation3::new(Mat3::from_diagonal(&[1.0, -1.0, -1.0])).unwrap();
        assert_eq!(rotation_angle(&half), PI);
    }
}
