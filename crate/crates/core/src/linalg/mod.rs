//! Fixed-size dense linear algebra: 3×3 SVD, matrix exponential and its
//! Fréchet derivative, rotation logarithm, Kronecker and commutation matrices.
//!
//! Matrices are stored row-major. The vectorisation `vec` used throughout the
//! crate is column stacking: `vec(M)[3j + i] = M[i][j]`.

mod expm;
mod matrix;
mod so3;
mod svd;

pub use expm::{
    commutation_matrix, dexp_frechet, dexp_jacobian, expm, kron, mat_exp, EXP_NORM_BOUND,
};
pub use matrix::{Lu, Mat3, Mat9, Matrix};
pub use so3::{is_rotation, rot_log, ROTATION_TOL};
pub use svd::{svd3, Svd3, MAX_SWEEPS, OFF_DIAG_TOL};
