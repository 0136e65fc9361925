//! Losses between a target homography `T` and a decoder estimate `T̂`.
//!
//! All losses depend on `T̂` only through `M = T⁻¹ T̂`, which makes them
//! invariant under left translation of both arguments. Gradients are taken
//! with respect to the nine entries of `T̂`, which may be any invertible
//! matrix; callers that normalise `T̂` chain through that map themselves.

use serde::{Deserialize, Serialize};

use super::projection::{project_so3_full, rotation_angle, sin_cos};
use super::riemann::{exp_identity_jacobian_mat, log_warm_start, solve_log, LogSolution};
use super::types::Homography;
use crate::error::{LieError, Result};
use crate::linalg::Mat3;

/// Distance in radians from 0 or π below which the angle derivative is
/// replaced by central differences.
pub const ANGLE_BAND: f64 = 1e-6;
/// Step of the finite-difference fallback, relative to `max(1, max|M_ij|)`.
const FALLBACK_STEP: f64 = 1e-6;
/// Condition-number bound for the Jacobian solve of the exact gradient.
pub const MAX_JACOBIAN_COND: f64 = 1e10;

/// Exponent applied to the rotation angle in the surrogate loss.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum AnglePower {
    #[default]
    One,
    Two,
}

impl TryFrom<u8> for AnglePower {
    type Error = LieError;
    fn try_from(p: u8) -> Result<Self> {
        match p {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            _ => Err(LieError::Config(format!(
                "angle power must be 1 or 2, got {p}"
            ))),
        }
    }
}

impl From<AnglePower> for u8 {
    fn from(p: AnglePower) -> u8 {
        match p {
            AnglePower::One => 1,
            AnglePower::Two => 2,
        }
    }
}

/// Weights of the surrogate loss `θ^p + λ ‖M − P‖²_F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub lambda: f64,
    pub angle_power: AnglePower,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            angle_power: AnglePower::One,
        }
    }
}

/// How the surrogate gradient was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientStatus {
    /// Full analytic gradient.
    Exact,
    /// `θ` is within [`ANGLE_BAND`] of 0 or π, where `∂θ/∂M` is unbounded;
    /// the gradient comes from central differences of the loss in `M`.
    FiniteDifference,
}

/// Value and gradient of the surrogate loss.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GdtResult {
    pub theta: f64,
    /// `‖M − P‖²_F`.
    pub residual_sq: f64,
    pub loss: f64,
    /// `∂loss/∂T̂`.
    pub grad_that: Mat3,
    pub status: GradientStatus,
}

fn relative(t: &Homography, that: &Mat3) -> Result<Mat3> {
    if !that.is_finite() {
        return Err(LieError::NonFinite("estimated transformation".into()));
    }
    Ok(*t.inverse().matrix() * *that)
}

/// Converts `∂ℓ/∂M` into `∂ℓ/∂T̂` for `M = T⁻¹ T̂`.
fn pull_back(t: &Homography, grad_m: &Mat3) -> Mat3 {
    t.inverse().matrix().transpose() * *grad_m
}

fn angle_term(theta: f64, power: AnglePower) -> f64 {
    match power {
        AnglePower::One => theta,
        AnglePower::Two => theta * theta,
    }
}

/// `(θ, ‖M − P‖², loss)` as a function of `M`.
fn surrogate_at(m: &Mat3, cfg: &SurrogateConfig) -> Result<(f64, f64, f64)> {
    let proj = project_so3_full(m)?;
    let theta = rotation_angle(&proj.rotation);
    let residual_sq = (*m - *proj.rotation.matrix()).frobenius_norm_sq();
    Ok((
        theta,
        residual_sq,
        angle_term(theta, cfg.angle_power) + cfg.lambda * residual_sq,
    ))
}

/// Surrogate loss value only: `(θ, ‖R_Π‖², loss)`.
pub fn surrogate_loss_value<M: AsRef<Mat3>>(
    t: &Homography,
    that: M,
    cfg: &SurrogateConfig,
) -> Result<(f64, f64, f64)> {
    surrogate_at(&relative(t, that.as_ref())?, cfg)
}

/// Central differences of the surrogate loss in the nine entries of `M`.
fn fallback_gradient(m: &Mat3, cfg: &SurrogateConfig) -> Result<Mat3> {
    let h = FALLBACK_STEP * m.max_abs().max(1.0);
    let mut g = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let (mut up, mut down) = (*m, *m);
            up[(i, j)] += h;
            down[(i, j)] -= h;
            g[(i, j)] = (surrogate_at(&up, cfg)?.2 - surrogate_at(&down, cfg)?.2) / (2.0 * h);
        }
    }
    Ok(g)
}

/// Evaluates `θ^p + λ ‖T⁻¹T̂ − Π(T⁻¹T̂)‖²_F` and its gradient.
pub fn surrogate_loss<M: AsRef<Mat3>>(
    t: &Homography,
    that: M,
    cfg: &SurrogateConfig,
) -> Result<GdtResult> {
    let m = relative(t, that.as_ref())?;
    let proj = project_so3_full(&m)?;
    let p = *proj.rotation.matrix();
    let (sin, cos) = sin_cos(&p);
    let theta = sin.atan2(cos);
    let residual = m - p;
    let residual_sq = residual.frobenius_norm_sq();

    let (grad_m, status) = if !(ANGLE_BAND..=std::f64::consts::PI - ANGLE_BAND).contains(&theta) {
        (
            fallback_gradient(&m, cfg)?,
            GradientStatus::FiniteDifference,
        )
    } else {
        // The residual is normal to SO(3) at P, so d‖M − P‖² = 2⟨M − P, dM⟩,
        // and dθ = −d(tr P) / (2 sin θ).
        let dtheta = -0.5 / sin;
        let outer = match cfg.angle_power {
            AnglePower::One => dtheta,
            AnglePower::Two => 2.0 * theta * dtheta,
        };
        let g = residual.scale(2.0 * cfg.lambda) + proj.trace_gradient().scale(outer);
        (g, GradientStatus::Exact)
    };

    Ok(GdtResult {
        theta,
        residual_sq,
        loss: angle_term(theta, cfg.angle_power) + cfg.lambda * residual_sq,
        grad_that: pull_back(t, &grad_m),
        status,
    })
}

pub fn surrogate_loss_grad<M: AsRef<Mat3>>(
    t: &Homography,
    that: M,
    cfg: &SurrogateConfig,
) -> Result<(Mat3, GradientStatus)> {
    surrogate_loss(t, that, cfg).map(|r| (r.grad_that, r.status))
}

/// Exact geodesic loss with the logarithm that produced it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactGdt {
    pub loss: f64,
    pub log: LogSolution,
}

/// Solver settings for the exact loss.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogSolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogSolverConfig {
    fn default() -> Self {
        Self {
            tol: super::riemann::DEFAULT_LOG_TOL,
            max_iter: super::riemann::DEFAULT_LOG_MAX_ITER,
        }
    }
}

pub fn gdt_exact_with<M: AsRef<Mat3>>(
    t: &Homography,
    that: M,
    solver: &LogSolverConfig,
) -> Result<ExactGdt> {
    let m = relative(t, that.as_ref())?;
    let log = solve_log(&m, &log_warm_start(&m), solver.tol, solver.max_iter)?;
    Ok(ExactGdt {
        loss: 0.5 * log.r.frobenius_norm_sq(),
        log,
    })
}

/// `½ ‖Log_I(T⁻¹ T̂)‖²_F`.
pub fn gdt_loss_exact<M: AsRef<Mat3>>(t: &Homography, that: M) -> Result<f64> {
    gdt_exact_with(t, that, &LogSolverConfig::default()).map(|e| e.loss)
}

/// Gradient of the exact loss: `vec(G)ᵀ = vec(R)ᵀ · J⁻¹ · (I ⊗ T⁻¹)`, with
/// `J` the Jacobian of the Riemannian exponential at `R`.
pub fn gdt_exact_grad<M: AsRef<Mat3>>(t: &Homography, that: M) -> Result<Mat3> {
    let exact = gdt_exact_with(t, that, &LogSolverConfig::default())?;
    gdt_exact_grad_at(t, &exact.log.r)
}

/// Gradient of the exact loss given an already solved logarithm `r`.
pub fn gdt_exact_grad_at(t: &Homography, r: &Mat3) -> Result<Mat3> {
    let j = exp_identity_jacobian_mat(r)?;
    let lu = j.lu().ok_or(LieError::IllConditioned {
        cond: f64::INFINITY,
    })?;
    let cond = j.norm1() * lu.inverse().norm1();
    if !(cond < MAX_JACOBIAN_COND) {
        return Err(LieError::IllConditioned { cond });
    }
    let y = Mat3::unvec(&lu.solve_transpose(&r.vec()));
    Ok(pull_back(t, &y))
}

/// `½ ‖T̂ − T‖²_F` and its gradient `T̂ − T`.
pub fn mse_loss<A: AsRef<Mat3>, B: AsRef<Mat3>>(t: A, that: B) -> (f64, Mat3) {
    let d = *that.as_ref() - *t.as_ref();
    (0.5 * d.frobenius_norm_sq(), d)
}
