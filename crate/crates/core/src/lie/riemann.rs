//! Riemannian exponential and logarithm at the identity of the homography
//! group under the left-invariant Frobenius metric, and geodesics built from them.
//!
//! The exponential is `Exp_I(R) = exp(Rᵀ) · exp(R − Rᵀ)`. There is no closed
//! form for its inverse, so the logarithm is computed by a damped Newton
//! iteration on `vec(Exp_I(R) − G)` using the analytic 9×9 Jacobian.

use super::projection::project_so3;
use super::types::{Homography, TangentVector};
use crate::error::{LieError, Result};
use crate::linalg::{commutation_matrix, dexp_jacobian, kron, mat_exp, rot_log, Mat3, Mat9};

pub const DEFAULT_LOG_TOL: f64 = 1e-12;
pub const DEFAULT_LOG_MAX_ITER: usize = 100;

/// `exp(rᵀ) · exp(r − rᵀ)` for any 3×3 `r`.
pub fn exp_identity_mat(r: &Mat3) -> Result<Mat3> {
    let rt = r.transpose();
    Ok(mat_exp(&rt)? * mat_exp(&(*r - rt))?)
}

/// Riemannian exponential at the identity. Trace-free input gives a unit
/// determinant output.
pub fn riem_exp_identity(r: &TangentVector) -> Result<Homography> {
    exp_identity_mat(r.matrix()).map(Homography::from_unit_det)
}

/// Jacobian of `vec(Exp_I(r))` with respect to `vec(r)`:
///
/// `(exp(Rᵀ−R) ⊗ I) · dexp(Rᵀ) · K + (I ⊗ exp(Rᵀ)) · dexp(R−Rᵀ) · (I − K)`.
pub fn exp_identity_jacobian_mat(r: &Mat3) -> Result<Mat9> {
    let rt = r.transpose();
    let skew = *r - rt;
    let id3 = Mat3::identity();
    let k = commutation_matrix();
    let first = kron(&mat_exp(&-skew)?, &id3) * dexp_jacobian(&rt)? * k;
    let second = kron(&id3, &mat_exp(&rt)?) * dexp_jacobian(&skew)? * (Mat9::identity() - k);
    Ok(first + second)
}

pub fn riem_exp_jacobian(r: &TangentVector) -> Result<Mat9> {
    exp_identity_jacobian_mat(r.matrix())
}

/// Outcome of a logarithm solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSolution {
    pub r: Mat3,
    pub iterations: usize,
    /// Final `‖Exp_I(r) − g‖_F`.
    pub residual: f64,
}

/// Warm start for the logarithm: the log of the nearest rotation, plus the
/// isotropic part `ln(det g)/3 · I` when `g` has a positive determinant
/// other than one.
pub fn log_warm_start(g: &Mat3) -> Mat3 {
    let mut r0 = project_so3(g)
        .and_then(|p| rot_log(p.matrix()))
        .unwrap_or_else(|_| Mat3::zeros());
    let det = g.det();
    if det > 0.0 && (det - 1.0).abs() > 1e-15 {
        r0 += Mat3::identity().scale(det.ln() / 3.0);
    }
    r0
}

/// Solves `Exp_I(r) = g` for `r` starting from `r0`.
///
/// Newton steps `J δ = −F` are taken while they reduce the residual;
/// otherwise the Levenberg system `(JᵀJ + μI) δ = −JᵀF` is used with `μ`
/// increased until the residual drops. Reliable for `‖g − I‖_F ≲ 1.5` with
/// the warm start of [`log_warm_start`].
pub fn solve_log(g: &Mat3, r0: &Mat3, tol: f64, max_iter: usize) -> Result<LogSolution> {
    if !g.is_finite() || !r0.is_finite() {
        return Err(LieError::NonFinite("solve_log input".into()));
    }
    let mut r = *r0;
    let mut f = exp_identity_mat(&r)? - *g;
    let mut res = f.frobenius_norm();
    let mut iterations = 0;
    let mut mu: f64 = 1e-6;
    while res > tol {
        if iterations >= max_iter {
            return Err(LieError::NoConvergence {
                iterations,
                residual: res,
            });
        }
        iterations += 1;
        let j = exp_identity_jacobian_mat(&r)?;
        let neg_f = f.vec().map(|x| -x);

        let mut accepted = false;
        if let Some(step) = j.solve(&neg_f) {
            let cand = r + Mat3::unvec(&step);
            if let Ok(e) = exp_identity_mat(&cand) {
                let fc = e - *g;
                let rc = fc.frobenius_norm();
                if rc < res {
                    r = cand;
                    f = fc;
                    res = rc;
                    accepted = true;
                    mu = (mu * 0.1).max(1e-12);
                }
            }
        }
        if accepted {
            continue;
        }

        let jtj = j.transpose() * j;
        let jtf = j.vec_mul(&neg_f);
        for _ in 0..30 {
            let mut damped = jtj;
            for d in 0..9 {
                damped[(d, d)] += mu * (1.0 + jtj[(d, d)]);
            }
            mu *= 10.0;
            let Some(step) = damped.solve(&jtf) else {
                continue;
            };
            let cand = r + Mat3::unvec(&step);
            let Ok(e) = exp_identity_mat(&cand) else {
                continue;
            };
            let fc = e - *g;
            let rc = fc.frobenius_norm();
            if rc < res {
                r = cand;
                f = fc;
                res = rc;
                accepted = true;
                break;
            }
        }
        if !accepted {
            // Stalled at the floating-point floor or at a local minimum.
            return Err(LieError::NoConvergence {
                iterations,
                residual: res,
            });
        }
    }
    Ok(LogSolution {
        r,
        iterations,
        residual: res,
    })
}

/// Riemannian logarithm at the identity.
pub fn riem_log_identity(
    g: &Homography,
    r0: &TangentVector,
    tol: f64,
    max_iter: usize,
) -> Result<TangentVector> {
    let sol = solve_log(g.matrix(), r0.matrix(), tol, max_iter)?;
    Ok(TangentVector::project(&sol.r))
}

/// The geodesic `γ(s) = T · Exp_I(s · Log_I(T⁻¹ T̂))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeodesicCurve {
    pub base: Homography,
    pub velocity: TangentVector,
}

impl GeodesicCurve {
    pub fn new(base: Homography, velocity: TangentVector) -> Self {
        Self { base, velocity }
    }

    /// Geodesic from `t` to `that`, solving the logarithm of `t⁻¹ that`.
    pub fn between(t: &Homography, that: &Homography) -> Result<Self> {
        let rel = t.inverse().compose(that);
        let r0 = TangentVector::project(&log_warm_start(rel.matrix()));
        let velocity = riem_log_identity(&rel, &r0, DEFAULT_LOG_TOL, DEFAULT_LOG_MAX_ITER)?;
        Ok(Self { base: *t, velocity })
    }

    pub fn point_at(&self, s: f64) -> Result<Homography> {
        Ok(self
            .base
            .compose(&riem_exp_identity(&self.velocity.scale(s))?))
    }
}

pub fn geodesic_point(curve: &GeodesicCurve, s: f64) -> Result<Homography> {
    curve.point_at(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::types::normalize_unit_det;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rz(a: f64) -> Homography {
        crate::lie::types::Rotation3::rot_z(a).as_homography()
    }

    fn rand_tangent(rng: &mut ChaCha8Rng, max_norm: f64) -> TangentVector {
        let m = TangentVector::project(&Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0)));
        let target = rng.gen_range(0.0..max_norm);
        m.scale(target / m.norm())
    }

    #[test]
    fn exp_of_zero() {
        assert_eq!(
            *riem_exp_identity(&TangentVector::zero()).unwrap().matrix(),
            Mat3::identity()
        );
    }

    #[test]
    fn skew_and_symmetric_reductions() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let w = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let skew = Mat3::skew(&w);
            let e = exp_identity_mat(&skew).unwrap();
            assert!((e - mat_exp(&skew).unwrap()).frobenius_norm() < 1e-12);

            let a = Mat3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
            let sym = TangentVector::project(&(a + a.transpose()));
            let e = exp_identity_mat(sym.matrix()).unwrap();
            assert!((e - mat_exp(sym.matrix()).unwrap()).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn unit_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let r = rand_tangent(&mut rng, 2.0);
            let g = riem_exp_identity(&r).unwrap();
            assert!((g.matrix().det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn jacobian_at_zero_is_identity() {
        let j = riem_exp_jacobian(&TangentVector::zero()).unwrap();
        assert!((j - Mat9::identity()).frobenius_norm() < 1e-15);
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = 1e-6;
        for case in 0..60 {
            let r = if case % 3 == 0 {
                let a = Mat3::from_fn(|_, _| rng.gen_range(-0.5..0.5));
                a + a.transpose()
            } else {
                *rand_tangent(&mut rng, 1.5).matrix()
            };
            let e = if case % 3 == 0 {
                Mat3::skew(&[
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ])
            } else {
                Mat3::from_fn(|_, _| rng.gen_range(-1.0..1.0))
            };
            let j = exp_identity_jacobian_mat(&r).unwrap();
            let fd = (exp_identity_mat(&(r + e.scale(h))).unwrap()
                - exp_identity_mat(&(r - e.scale(h))).unwrap())
            .scale(0.5 / h);
            let lin = Mat3::unvec(&j.mul_vec(&e.vec()));
            assert!((lin - fd).frobenius_norm() <= 1e-6);
        }
    }

    #[test]
    fn log_of_identity() {
        let r =
            riem_log_identity(&Homography::identity(), &TangentVector::zero(), 1e-12, 10).unwrap();
        assert_eq!(*r.matrix(), Mat3::zeros());
    }

    #[test]
    fn log_roundtrip_from_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let r0 = rand_tangent(&mut rng, 0.5);
            let g = riem_exp_identity(&r0).unwrap();
            let r = riem_log_identity(&g, &TangentVector::zero(), 1e-12, 100).unwrap();
            assert!((*r.matrix() - *r0.matrix()).frobenius_norm() < 1e-8);
            let back = riem_exp_identity(&r).unwrap();
            assert!((*back.matrix() - *g.matrix()).frobenius_norm() <= 1e-10);
        }
    }

    #[test]
    fn log_of_pure_rotation() {
        let g = rz(0.4);
        let r = riem_log_identity(&g, &TangentVector::zero(), 1e-13, 50).unwrap();
        assert!((*r.matrix() - Mat3::skew(&[0.0, 0.0, 0.4])).frobenius_norm() < 1e-10);
    }

    #[test]
    fn no_convergence_is_reported() {
        let g = normalize_unit_det(&Mat3::from_rows([
            [2.0, 1.5, 0.3],
            [-0.7, 0.4, 1.1],
            [0.2, -0.9, 1.3],
        ]))
        .unwrap();
        let err = riem_log_identity(&g, &TangentVector::zero(), 1e-12, 1).unwrap_err();
        assert!(matches!(err, LieError::NoConvergence { iterations: 1, .. }));
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let t = Homography::identity();
        let that = rz(0.6);
        let c = GeodesicCurve::between(&t, &that).unwrap();
        assert_eq!(*geodesic_point(&c, 0.0).unwrap().matrix(), *t.matrix());
        assert!(
            (*geodesic_point(&c, 1.0).unwrap().matrix() - *that.matrix()).frobenius_norm() < 1e-8
        );
        assert!(
            (*geodesic_point(&c, 0.5).unwrap().matrix() - Mat3::rot_z(0.3)).frobenius_norm()
                < 1e-10
        );

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let t = riem_exp_identity(&rand_tangent(&mut rng, 0.8)).unwrap();
            let that = riem_exp_identity(&rand_tangent(&mut rng, 0.8)).unwrap();
            let Ok(c) = GeodesicCurve::between(&t, &that) else {
                continue;
            };
            assert!((*c.point_at(1.0).unwrap().matrix() - *that.matrix()).frobenius_norm() < 1e-8);
        }
    }
}
