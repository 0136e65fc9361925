use serde::{Deserialize, Serialize};

use crate::error::{LieError, Result};
use crate::linalg::{is_rotation, Mat3};

/// Pre-normalisation determinants below this magnitude are rejected.
pub const SINGULAR_DET: f64 = 1e-9;
/// Allowed trace of a tangent vector.
pub const TRACE_TOL: f64 = 1e-10;
/// Orthogonality and determinant tolerance for [`Rotation3`].
pub const ROTATION3_TOL: f64 = 1e-9;

/// A homography: a 3×3 matrix with unit determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct Homography(Mat3);

impl Homography {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Wraps a matrix whose determinant is already one up to rounding.
    pub(crate) fn from_unit_det(m: Mat3) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    /// Group inverse. The adjugate equals the inverse for unit determinant.
    pub fn inverse(&self) -> Homography {
        Self(self.0.adjugate().scale(1.0 / self.0.det()))
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &Homography) -> Homography {
        Self(self.0 * other.0)
    }

    /// Maps an inhomogeneous point, dividing by the third coordinate.
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let p = self.0.mul_vec(&[x, y, 1.0]);
        (p[0] / p[2], p[1] / p[2])
    }
}

impl AsRef<Mat3> for Homography {
    fn as_ref(&self) -> &Mat3 {
        &self.0
    }
}

impl From<Homography> for Mat3 {
    fn from(h: Homography) -> Mat3 {
        h.0
    }
}

impl TryFrom<Mat3> for Homography {
    type Error = LieError;
    fn try_from(m: Mat3) -> Result<Self> {
        normalize_unit_det(&m)
    }
}

/// Scales `m` by the real cube root of its determinant so that the result
/// has determinant one. Negative determinants are handled by the negative
/// cube root.
pub fn normalize_unit_det(m: &Mat3) -> Result<Homography> {
    if !m.is_finite() {
        return Err(LieError::NonFinite("normalize_unit_det input".into()));
    }
    let det = m.det();
    if det.abs() < SINGULAR_DET || !det.is_finite() {
        return Err(LieError::SingularMatrix { det });
    }
    Ok(Homography(m.scale(1.0 / det.cbrt())))
}

/// An element of the Lie algebra: a trace-free 3×3 matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TangentVector(Mat3);

impl TangentVector {
    pub fn zero() -> Self {
        Self(Mat3::zeros())
    }

    pub fn new(m: Mat3) -> Result<Self> {
        if !m.is_finite() {
            return Err(LieError::NonFinite("tangent vector".into()));
        }
        let tr = m.trace();
        if tr.abs() > TRACE_TOL {
            return Err(LieError::Domain(format!(
                "tangent vector must be trace-free (trace {tr:e})"
            )));
        }
        Ok(Self(m))
    }

    /// Removes the trace, mapping any matrix onto the algebra.
    pub fn project(m: &Mat3) -> Self {
        let t = m.trace() / 3.0;
        Self(*m - Mat3::identity().scale(t))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn norm(&self) -> f64 {
        self.0.frobenius_norm()
    }
}

impl AsRef<Mat3> for TangentVector {
    fn as_ref(&self) -> &Mat3 {
        &self.0
    }
}

/// A rotation: orthogonal with determinant +1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Rotation3(Mat3);

impl Rotation3 {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    pub fn new(m: Mat3) -> Result<Self> {
        if !is_rotation(&m, ROTATION3_TOL) {
            return Err(LieError::Domain("matrix is not in SO(3)".into()));
        }
        Ok(Self(m))
    }

    pub(crate) fn from_orthonormal(m: Mat3) -> Self {
        Self(m)
    }

    pub fn rot_z(angle: f64) -> Self {
        Self(Mat3::rot_z(angle))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn as_homography(&self) -> Homography {
        Homography(self.0)
    }
}

impl AsRef<Mat3> for Rotation3 {
    fn as_ref(&self) -> &Mat3 {
        &self.0
    }
}
