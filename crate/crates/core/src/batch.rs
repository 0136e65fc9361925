//! Element-wise loss evaluation over flat, row-major inputs.
//!
//! Every request is evaluated independently. A failing element yields a
//! status code instead of aborting the batch, and results keep request order.

use serde::{Deserialize, Serialize};

use crate::error::LieError;
use crate::lie::{
    gdt_exact_grad_at, gdt_exact_with, mse_loss, surrogate_loss, surrogate_loss_value, AnglePower,
    GradientStatus, Homography, LogSolverConfig, SurrogateConfig,
};
use crate::linalg::Mat3;
use crate::train::normalization_adjoint;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    #[default]
    Surrogate,
    Exact,
    Mse,
}

impl std::str::FromStr for LossMode {
    type Err = LieError;
    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "surrogate" => Ok(Self::Surrogate),
            "exact" => Ok(Self::Exact),
            "mse" => Ok(Self::Mse),
            _ => Err(LieError::Config(format!("unknown loss mode {s:?}"))),
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}

/// One loss evaluation. Both matrices are nine row-major reals and are
/// scaled to unit determinant before use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossRequest {
    pub t: [f64; 9],
    pub that: [f64; 9],
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub angle_power: AnglePower,
    #[serde(default)]
    pub mode: LossMode,
    /// Treat the ninth entry of `that` as the constant one: its gradient is
    /// reported as zero.
    #[serde(default)]
    pub fixed_last: bool,
}

impl LossRequest {
    pub fn new(t: [f64; 9], that: [f64; 9], mode: LossMode) -> Self {
        Self {
            t,
            that,
            lambda: 1.0,
            angle_power: AnglePower::One,
            mode,
            fixed_last: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossStatus {
    Ok,
    /// A matrix is singular or non-finite, or its nearest rotation is not unique.
    Singular,
    /// The logarithm solve failed (exact mode only).
    NoConvergence,
    /// The value is valid but the gradient is a finite-difference fallback
    /// or unavailable (ill-conditioned Jacobian in exact mode).
    NearSingularGradient,
    /// The request itself is malformed, e.g. a non-positive `lambda`.
    Invalid,
}

/// Result of one request. Fields that could not be computed are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossResponse {
    pub status: LossStatus,
    pub loss: Option<f64>,
    /// `∂loss/∂that`, nine row-major reals.
    pub grad: Option<[f64; 9]>,
    pub theta: Option<f64>,
    pub residual_sq: Option<f64>,
    /// Logarithm solver iterations (exact mode).
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

impl LossResponse {
    fn failed(e: &LieError) -> Self {
        let status = match e {
            LieError::SingularMatrix { .. }
            | LieError::NonFinite(_)
            | LieError::DegenerateProjection { .. } => LossStatus::Singular,
            LieError::NoConvergence { .. } | LieError::Range { .. } => LossStatus::NoConvergence,
            LieError::IllConditioned { .. } => LossStatus::NearSingularGradient,
            LieError::Domain(_) | LieError::Config(_) | LieError::Internal(_) => {
                LossStatus::Invalid
            }
        };
        Self {
            status,
            loss: None,
            grad: None,
            theta: None,
            residual_sq: None,
            iterations: None,
            error: Some(e.to_string()),
        }
    }
}

fn eval_one(req: &LossRequest) -> crate::Result<LossResponse> {
    if !(req.lambda > 0.0 && req.lambda.is_finite()) {
        return Err(LieError::Config(format!(
            "lambda must be positive, got {}",
            req.lambda
        )));
    }
    let t = Homography::try_from(Mat3::from_row_major(&req.t))?;
    let a = Mat3::from_row_major(&req.that);
    let that = Homography::try_from(a)?;
    let cfg = SurrogateConfig {
        lambda: req.lambda,
        angle_power: req.angle_power,
    };

    let mut resp = LossResponse {
        status: LossStatus::Ok,
        loss: None,
        grad: None,
        theta: None,
        residual_sq: None,
        iterations: None,
        error: None,
    };
    let grad_that = match req.mode {
        LossMode::Surrogate => {
            let r = surrogate_loss(&t, that, &cfg)?;
            if r.status == GradientStatus::FiniteDifference {
                resp.status = LossStatus::NearSingularGradient;
            }
            resp.loss = Some(r.loss);
            resp.theta = Some(r.theta);
            resp.residual_sq = Some(r.residual_sq);
            Some(r.grad_that)
        }
        LossMode::Mse => {
            let (loss, grad) = mse_loss(t, that);
            resp.loss = Some(loss);
            if let Ok((theta, res, _)) = surrogate_loss_value(&t, that, &cfg) {
                resp.theta = Some(theta);
                resp.residual_sq = Some(res);
            }
            Some(grad)
        }
        LossMode::Exact => {
            let exact = gdt_exact_with(&t, that, &LogSolverConfig::default())?;
            resp.loss = Some(exact.loss);
            resp.iterations = Some(exact.log.iterations);
            if let Ok((theta, res, _)) = surrogate_loss_value(&t, that, &cfg) {
                resp.theta = Some(theta);
                resp.residual_sq = Some(res);
            }
            match gdt_exact_grad_at(&t, &exact.log.r) {
                Ok(g) => Some(g),
                Err(e @ LieError::IllConditioned { .. }) => {
                    resp.status = LossStatus::NearSingularGradient;
                    resp.error = Some(e.to_string());
                    None
                }
                Err(e) => return Err(e),
            }
        }
    };
    if let Some(g) = grad_that {
        let mut grad = normalization_adjoint(&a, that.matrix(), &g)?.to_row_major();
        if req.fixed_last {
            grad[8] = 0.0;
        }
        resp.grad = Some(grad);
    }
    Ok(resp)
}

/// Evaluates a single request; errors become status codes.
pub fn eval_loss(req: &LossRequest) -> LossResponse {
    eval_one(req).unwrap_or_else(|e| LossResponse::failed(&e))
}

/// Evaluates every request in order.
pub fn eval_loss_batch(requests: &[LossRequest]) -> Vec<LossResponse> {
    requests.iter().map(eval_loss).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{params_to_homography, sample_params, Rng};

    const I: [f64; 9] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];

    fn random_h(rng: &mut Rng) -> [f64; 9] {
        params_to_homography(&sample_params(rng), 32, 32)
            .unwrap()
            .matrix()
            .to_row_major()
    }

    #[test]
    fn identical_pairs_are_zero() {
        let mut rng = Rng::new(1);
        let reqs: Vec<LossRequest> = [LossMode::Surrogate, LossMode::Exact, LossMode::Mse]
            .iter()
            .flat_map(|&m| {
                let h = random_h(&mut rng);
                [LossRequest::new(h, h, m), LossRequest::new(I, I, m)]
            })
            .collect();
        for r in eval_loss_batch(&reqs) {
            assert!(r.loss.unwrap().abs() < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn singular_element_is_isolated() {
        let mut rng = Rng::new(2);
        let (a, b) = (random_h(&mut rng), random_h(&mut rng));
        let mut singular = I;
        singular[0] = 0.0;
        singular[1] = 0.0;
        singular[2] = 0.0;
        let reqs = [
            LossRequest::new(a, b, LossMode::Surrogate),
            LossRequest::new(a, singular, LossMode::Surrogate),
            LossRequest::new(b, a, LossMode::Surrogate),
        ];
        let out = eval_loss_batch(&reqs);
        let statuses: Vec<_> = out.iter().map(|r| r.status).collect();
        assert_eq!(
            statuses,
            [LossStatus::Ok, LossStatus::Singular, LossStatus::Ok]
        );
        assert_eq!(out[0], eval_loss(&reqs[0]));
        assert_eq!(out[2], eval_loss(&reqs[2]));
        assert!(out[1].loss.is_none() && out[1].error.is_some());
    }

    #[test]
    fn invalid_lambda() {
        let mut req = LossRequest::new(I, I, LossMode::Surrogate);
        req.lambda = 0.0;
        assert_eq!(eval_loss(&req).status, LossStatus::Invalid);
    }

    #[test]
    fn fixed_last_zeroes_ninth() {
        let mut rng = Rng::new(3);
        let mut req = LossRequest::new(random_h(&mut rng), random_h(&mut rng), LossMode::Surrogate);
        let free = eval_loss(&req).grad.unwrap();
        req.fixed_last = true;
        let fixed = eval_loss(&req).grad.unwrap();
        assert_eq!(&free[..8], &fixed[..8]);
        assert_eq!(fixed[8], 0.0);
    }

    #[test]
    fn gradient_is_with_respect_to_raw_input() {
        let mut rng = Rng::new(4);
        for mode in [LossMode::Surrogate, LossMode::Exact, LossMode::Mse] {
            let t = random_h(&mut rng);
            let mut that = random_h(&mut rng);
            that.iter_mut().for_each(|v| *v *= 1.7);
            let req = LossRequest::new(t, that, mode);
            let g = eval_loss(&req).grad.unwrap();
            let h = 1e-6;
            for k in 0..9 {
                let (mut p, mut q) = (req, req);
                p.that[k] += h;
                q.that[k] -= h;
                let fd = (eval_loss(&p).loss.unwrap() - eval_loss(&q).loss.unwrap()) / (2.0 * h);
                assert!(
                    (fd - g[k]).abs() <= 1e-5 * fd.abs().max(g[k].abs()) + 1e-7,
                    "{mode:?} {k}: {fd} vs {}",
                    g[k]
                );
            }
        }
    }

    #[test]
    fn request_json_defaults() {
        let req: LossRequest =
            serde_json::from_str(r#"{"t":[1,0,0,0,1,0,0,0,1],"that":[1,0,0,0,1,0,0,0,1]}"#)
                .unwrap();
        assert_eq!(req, LossRequest::new(I, I, LossMode::Surrogate));
        assert!(serde_json::from_str::<LossRequest>(
            r#"{"t":[1,0,0,0,1,0,0,0,1],"that":[1,0,0,0,1,0,0,0,1],"angle_power":3}"#
        )
        .is_err());
        assert!(serde_json::from_str::<LossRequest>(
            r#"{"t":[1,0,0,0,1,0,0,0,1],"that":[1,0,0,0,1,0,0,0,1],"bogus":1}"#
        )
        .is_err());
    }
}
