//! From eight decoder outputs to a loss value and its gradient.

use crate::error::{LieError, Result};
use crate::lie::{mse_loss, normalize_unit_det, surrogate_loss, GradientStatus, Homography};
use crate::linalg::Mat3;

use super::config::{LossKind, TrainConfig};
use super::model::RAW_OUTPUTS;

/// Row-major 3×3 matrix from the eight outputs with the last entry fixed to one.
pub fn raw_to_matrix(raw8: &[f64; RAW_OUTPUTS]) -> Mat3 {
    let mut a = [0.0; 9];
    a[..8].copy_from_slice(raw8);
    a[8] = 1.0;
    Mat3::from_row_major(&a)
}

/// Fills a 3×3 matrix with `raw8` and 1, then scales it to unit determinant.
pub fn decoder_output_to_homography(raw8: &[f64; RAW_OUTPUTS]) -> Result<Homography> {
    if raw8.iter().any(|v| !v.is_finite()) {
        return Err(LieError::NonFinite("decoder output".into()));
    }
    normalize_unit_det(&raw_to_matrix(raw8))
}

/// Pulls `G = ∂ℓ/∂T̂` back through `T̂ = A / ∛det A`:
/// `∂ℓ/∂A = G/c − (⟨G, T̂⟩/3) A⁻ᵀ` with `c = ∛det A`.
pub fn normalization_adjoint(a: &Mat3, that: &Mat3, grad_that: &Mat3) -> Result<Mat3> {
    let det = a.det();
    let c = det.cbrt();
    let a_inv_t = a
        .inverse()
        .ok_or(LieError::SingularMatrix { det })?
        .transpose();
    Ok(grad_that.scale(1.0 / c) - a_inv_t.scale(grad_that.dot(that) / 3.0))
}

/// Loss and gradient with respect to the eight decoder outputs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeadOutput {
    pub loss: f64,
    pub grad_raw8: [f64; RAW_OUTPUTS],
    /// Rotation angle of `T⁻¹T̂` after projection onto SO(3).
    pub theta: f64,
    pub status: GradientStatus,
}

/// Evaluates the configured loss between `t` and the decoded estimate and
/// chains its gradient through the unit-determinant normalisation. The
/// ninth entry is constant, so its gradient is dropped.
pub fn loss_head_grad(
    t: &Homography,
    raw8: &[f64; RAW_OUTPUTS],
    cfg: &TrainConfig,
) -> Result<HeadOutput> {
    let that = decoder_output_to_homography(raw8)?;
    let a = raw_to_matrix(raw8);
    let surrogate = surrogate_loss(t, that, &cfg.surrogate());
    let (loss, grad_that, theta, status) = match cfg.loss_kind {
        LossKind::GdtSurrogate => {
            let r = surrogate?;
            (r.loss, r.grad_that, r.theta, r.status)
        }
        LossKind::Mse => {
            let (loss, grad) = mse_loss(t, that);
            // The angle is only reported; a degenerate projection does not
            // stop the MSE arm from training.
            let theta = surrogate.map_or(f64::NAN, |r| r.theta);
            (loss, grad, theta, GradientStatus::Exact)
        }
    };
    let grad_a = normalization_adjoint(&a, that.matrix(), &grad_that)?;
    let mut grad_raw8 = [0.0; RAW_OUTPUTS];
    grad_raw8.copy_from_slice(&grad_a.to_row_major()[..8]);
    Ok(HeadOutput {
        loss,
        grad_raw8,
        theta,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::surrogate_loss_value;
    use crate::sampler::{params_to_homography, sample_params, Rng};
    use crate::train::model::IDENTITY_RAW;

    fn raw_of(h: &Mat3, jitter: f64, rng: &mut Rng) -> [f64; 8] {
        let m = h.to_row_major();
        std::array::from_fn(|k| m[k] / m[8] + rng.uniform(-jitter, jitter))
    }

    fn loss_at(t: &Homography, raw: &[f64; 8], cfg: &TrainConfig) -> f64 {
        let that = decoder_output_to_homography(raw).unwrap();
        match cfg.loss_kind {
            LossKind::GdtSurrogate => surrogate_loss_value(t, that, &cfg.surrogate()).unwrap().2,
            LossKind::Mse => mse_loss(t, that).0,
        }
    }

    #[test]
    fn identity_raw_is_identity() {
        let h = decoder_output_to_homography(&IDENTITY_RAW).unwrap();
        assert_eq!(h, Homography::identity());
    }

    #[test]
    fn scaled_identity_normalises() {
        let h = decoder_output_to_homography(&[2.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0]).unwrap();
        let c = 4f64.cbrt();
        let want = Mat3::from_diagonal(&[2.0 / c, 2.0 / c, 1.0 / c]);
        assert!((*h.matrix() - want).frobenius_norm() < 1e-15);
        assert!((h.matrix().det() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_top_row_is_singular() {
        let r = decoder_output_to_homography(&[0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(r, Err(LieError::SingularMatrix { .. })));
    }

    #[test]
    fn perfect_prediction() {
        let mut rng = Rng::new(3);
        for kind in [LossKind::GdtSurrogate, LossKind::Mse] {
            let cfg = TrainConfig {
                loss_kind: kind,
                ..TrainConfig::default()
            };
            let t = params_to_homography(&sample_params(&mut rng), 32, 32).unwrap();
            let raw = raw_of(t.matrix(), 0.0, &mut rng);
            let out = loss_head_grad(&t, &raw, &cfg).unwrap();
            assert!(out.loss.abs() < 1e-12, "{kind}: {}", out.loss);
            assert!(
                out.grad_raw8.iter().all(|g| g.abs() < 1e-6),
                "{kind}: {:?}",
                out.grad_raw8
            );
        }
    }

    #[test]
    fn mse_is_on_normalised_matrices() {
        let mut rng = Rng::new(4);
        let cfg = TrainConfig {
            loss_kind: LossKind::Mse,
            ..TrainConfig::default()
        };
        let t = params_to_homography(&sample_params(&mut rng), 32, 32).unwrap();
        let raw = raw_of(t.matrix(), 0.2, &mut rng);
        let that = normalize_unit_det(&raw_to_matrix(&raw)).unwrap();
        let direct = 0.5 * (*that.matrix() - *t.matrix()).frobenius_norm_sq();
        assert!((loss_head_grad(&t, &raw, &cfg).unwrap().loss - direct).abs() < 1e-15);
    }

    #[test]
    fn chain_matches_finite_differences() {
        let mut rng = Rng::new(5);
        for kind in [LossKind::GdtSurrogate, LossKind::Mse] {
            for power in [crate::lie::AnglePower::One, crate::lie::AnglePower::Two] {
                let cfg = TrainConfig {
                    loss_kind: kind,
                    angle_power: power,
                    lambda: rng.uniform(0.5, 2.0),
                    ..TrainConfig::default()
                };
                for _ in 0..20 {
                    let t = params_to_homography(&sample_params(&mut rng), 32, 32).unwrap();
                    let truth = params_to_homography(&sample_params(&mut rng), 32, 32).unwrap();
                    let raw = raw_of(truth.matrix(), 0.05, &mut rng);
                    let out = loss_head_grad(&t, &raw, &cfg).unwrap();
                    let h = 1e-6;
                    for k in 0..8 {
                        let (mut p, mut q) = (raw, raw);
                        p[k] += h;
                        q[k] -= h;
                        let fd = (loss_at(&t, &p, &cfg) - loss_at(&t, &q, &cfg)) / (2.0 * h);
                        let an = out.grad_raw8[k];
                        assert!(
                            (fd - an).abs() <= 1e-4 * fd.abs().max(an.abs()) + 1e-7,
                            "{kind} entry {k}: fd {fd} vs {an}"
                        );
                    }
                }
            }
        }
    }
}
