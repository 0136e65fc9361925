use thiserror::Error;

/// Errors raised by the numerical kernels, the sampler and the trainer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LieError {
    /// The matrix is singular (or too close to it) for the requested operation.
    #[error("singular matrix (|det| = {det:e})")]
    SingularMatrix { det: f64 },

    /// An input norm exceeds the range in which the matrix exponential is representable.
    #[error("matrix norm {norm:e} exceeds the exponential range bound {bound:e}")]
    Range { norm: f64, bound: f64 },

    /// The input does not belong to the expected set (e.g. not a rotation).
    #[error("domain error: {0}")]
    Domain(String),

    /// The iterative Riemannian-logarithm solve did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// A linear solve was too badly conditioned to be trusted.
    #[error("ill-conditioned system (condition estimate {cond:e})")]
    IllConditioned { cond: f64 },

    /// The nearest rotation is not unique.
    #[error("projection onto SO(3) is not unique (sigma2 + sigma3*det(UV^T) = {margin:e})")]
    DegenerateProjection { margin: f64 },

    /// A NaN or infinity appeared where finite values are required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Invalid configuration or arguments.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Internal algorithm failure, e.g. SVD sweep cap reached.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, LieError>;

impl LieError {
    /// Stable snake_case identifier for machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SingularMatrix { .. } => "singular_matrix",
            Self::Range { .. } => "range",
            Self::Domain(_) => "domain",
            Self::NoConvergence { .. } => "no_convergence",
            Self::IllConditioned { .. } => "ill_conditioned",
            Self::DegenerateProjection { .. } => "degenerate_projection",
            Self::NonFinite(_) => "non_finite",
            Self::Config(_) => "config",
            Self::Internal(_) => "internal",
        }
    }
}
