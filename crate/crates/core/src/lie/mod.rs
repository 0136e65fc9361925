//! Geometry of the homography group PG(2) and its rotation subgroup SO(3).
//!
//! Homographies are unit-determinant 3×3 matrices; the Lie algebra is the
//! space of trace-free matrices. With the left-invariant Frobenius metric the
//! squared geodesic distance between `T` and `T̂` is `½‖Log_I(T⁻¹T̂)‖²_F`.
//! The logarithm has no closed form, so besides the exact (iterative) loss
//! the module provides the surrogate that projects `T⁻¹T̂` onto SO(3):
//!
//! ```text
//! loss = θ^p + λ ‖T⁻¹T̂ − P‖²_F,   P = Π_SO(3)(T⁻¹T̂),   θ = arccos((tr P − 1)/2)
//! ```

mod loss;
mod projection;
mod riemann;
mod types;

pub use loss::{
    gdt_exact_grad, gdt_exact_grad_at, gdt_exact_with, gdt_loss_exact, mse_loss, surrogate_loss,
    surrogate_loss_grad, surrogate_loss_value, AnglePower, ExactGdt, GdtResult, GradientStatus,
    LogSolverConfig, SurrogateConfig, ANGLE_BAND, MAX_JACOBIAN_COND,
};
pub use projection::{
    project_so3, project_so3_full, rotation_angle, rotation_log, So3Projection, UNIQUENESS_TOL,
};
pub use riemann::{
    exp_identity_jacobian_mat, exp_identity_mat, geodesic_point, log_warm_start, riem_exp_identity,
    riem_exp_jacobian, riem_log_identity, solve_log, GeodesicCurve, LogSolution,
    DEFAULT_LOG_MAX_ITER, DEFAULT_LOG_TOL,
};
pub use types::{
    normalize_unit_det, Homography, Rotation3, TangentVector, ROTATION3_TOL, SINGULAR_DET,
    TRACE_TOL,
};
