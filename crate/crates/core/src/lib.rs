//! Geodesic losses between homographies.
//!
//! The crate provides the pieces needed to train a transformation decoder
//! with a loss that measures deviation along the homography group rather than
//! in the ambient space of 3×3 matrices:
//!
//! - [`linalg`]: small dense kernels (SVD, `expm`, Fréchet derivative, `vec`/`kron`).
//! - [`lie`]: the left-invariant Riemannian exponential and logarithm, geodesics,
//!   the closed-form projection onto SO(3), the exact and surrogate geodesic
//!   losses, and their analytic gradients.
//! - [`sampler`]: random homographies, synthetic images and warping.
//! - [`train`]: a small Siamese encoder/decoder trained by Adam on the surrogate loss.
//! - [`batch`]: an order-preserving batch evaluator with per-element status codes.

pub mod batch;
pub mod error;
pub mod lie;
pub mod linalg;
pub mod sampler;
pub mod train;

pub use error::{LieError, Result};
