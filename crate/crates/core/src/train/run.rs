//! The training loop and its report.

use std::fmt::Write as _;
use std::time::Instant;

use log::{debug, info};
use serde::Serialize;

use crate::error::{LieError, Result};
use crate::lie::{GradientStatus, Homography};
use crate::sampler::{
    make_synthetic_image, params_to_homography, sample_params, warp_image, GrayImage, Rng,
    TransformParams,
};

use super::adam::{AdamParams, AdamState};
use super::config::TrainConfig;
use super::head::loss_head_grad;
use super::model::{ModelWeights, RAW_OUTPUTS};

/// Stream index used for weight initialisation.
const INIT_STREAM: u64 = u64::MAX;
/// Held-out pairs use stream ids from here on; training samples count up from 0.
const EVAL_STREAM_BASE: u64 = 1 << 62;

/// One training or evaluation example: an image, its warp and the warp.
#[derive(Clone, Debug)]
pub struct Sample {
    pub image: GrayImage,
    pub warped: GrayImage,
    pub params: TransformParams,
    pub transform: Homography,
}

/// Draws the example for stream `(seed, index)`. Independent of the order in
/// which examples are generated.
pub fn make_sample(seed: u64, index: u64, size: usize) -> Result<Sample> {
    let mut rng = Rng::with_stream(seed, index);
    let image = make_synthetic_image(&mut rng, size, size)?;
    let params = sample_params(&mut rng);
    let transform = params_to_homography(&params, size, size)?;
    let warped = warp_image(&image, &transform);
    Ok(Sample {
        image,
        warped,
        params,
        transform,
    })
}

pub fn eval_samples(cfg: &TrainConfig) -> Result<Vec<Sample>> {
    (0..cfg.eval_pairs as u64)
        .map(|i| make_sample(cfg.seed, EVAL_STREAM_BASE + i, cfg.image_size))
        .collect()
}

pub fn init_weights(cfg: &TrainConfig) -> ModelWeights {
    let mut rng = Rng::with_stream(cfg.seed, INIT_STREAM);
    let input = cfg.image_size * cfg.image_size;
    ModelWeights::init(input, &cfg.encoder_widths, &cfg.decoder_hidden, &mut rng)
}

/// Mean rotation angle of `T⁻¹T̂` over `samples`. A prediction that cannot
/// be decoded or projected counts as the largest possible angle, π.
pub fn mean_angle_error(weights: &ModelWeights, samples: &[Sample], cfg: &TrainConfig) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let total: f64 = samples
        .iter()
        .map(|s| {
            let (raw, _) = weights.forward(&s.image, &s.warped);
            match loss_head_grad(&s.transform, &raw, cfg) {
                Ok(out) if out.theta.is_finite() => out.theta,
                _ => std::f64::consts::PI,
            }
        })
        .sum();
    total / samples.len() as f64
}

/// Per-step series and run summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    /// Mean loss over the usable samples of each step.
    pub losses: Vec<f64>,
    /// Mean rotation angle between predicted and true transformation per step.
    pub angle_errors: Vec<f64>,
    /// Samples whose prediction could not be decoded or differentiated.
    pub skipped_samples: usize,
    /// Samples whose gradient came from the finite-difference fallback.
    pub fallback_samples: usize,
    pub initial_smoothed_loss: f64,
    pub final_smoothed_loss: f64,
    pub eval_angle_error_untrained: f64,
    pub eval_angle_error_trained: f64,
    pub initial_weights_digest: String,
    pub weights_digest: String,
    pub wall_clock_secs: f64,
}

/// Report fields suitable for a JSON summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainSummary {
    pub config: TrainConfig,
    pub steps_run: usize,
    pub skipped_samples: usize,
    pub fallback_samples: usize,
    pub initial_smoothed_loss: f64,
    pub final_smoothed_loss: f64,
    pub loss_ratio: f64,
    pub eval_angle_error_untrained: f64,
    pub eval_angle_error_trained: f64,
    pub initial_weights_digest: String,
    pub weights_digest: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
}

fn smoothed(series: &[f64], window: usize, tail: bool) -> f64 {
    if series.is_empty() {
        return f64::NAN;
    }
    let w = window.min(series.len());
    let part = if tail {
        &series[series.len() - w..]
    } else {
        &series[..w]
    };
    part.iter().sum::<f64>() / w as f64
}

impl TrainReport {
    /// `step,loss,angle_error` with one row per step, steps counted from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,loss,angle_error\n");
        for (k, (l, a)) in self.losses.iter().zip(&self.angle_errors).enumerate() {
            writeln!(out, "{},{l:e},{a:e}", k + 1).expect("write to String");
        }
        out
    }

    /// Summary without the series. `with_wall_clock = false` yields output
    /// that is identical across re-runs.
    pub fn summary(&self, with_wall_clock: bool) -> TrainSummary {
        TrainSummary {
            config: self.config.clone(),
            steps_run: self.losses.len(),
            skipped_samples: self.skipped_samples,
            fallback_samples: self.fallback_samples,
            initial_smoothed_loss: self.initial_smoothed_loss,
            final_smoothed_loss: self.final_smoothed_loss,
            loss_ratio: self.final_smoothed_loss / self.initial_smoothed_loss,
            eval_angle_error_untrained: self.eval_angle_error_untrained,
            eval_angle_error_trained: self.eval_angle_error_trained,
            initial_weights_digest: self.initial_weights_digest.clone(),
            weights_digest: self.weights_digest.clone(),
            wall_clock_secs: with_wall_clock.then_some(self.wall_clock_secs),
        }
    }
}

fn clip(g: [f64; RAW_OUTPUTS], bound: Option<f64>) -> [f64; RAW_OUTPUTS] {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    match bound {
        Some(b) if norm > b => g.map(|v| v * (b / norm)),
        _ => g,
    }
}

pub fn train(cfg: &TrainConfig) -> Result<TrainReport> {
    train_with_weights(cfg).map(|(report, _)| report)
}

/// Runs the training loop and also returns the final weights.
pub fn train_with_weights(cfg: &TrainConfig) -> Result<(TrainReport, ModelWeights)> {
    cfg.validate()?;
    let started = Instant::now();
    let mut weights = init_weights(cfg);
    let initial = weights.clone();
    let mut adam = AdamState::new(&weights);
    let adam_params = AdamParams {
        learning_rate: cfg.learning_rate,
        beta1: cfg.beta1,
        beta2: cfg.beta2,
        epsilon: cfg.epsilon,
        weight_decay: cfg.weight_decay,
    };
    let n = cfg.minibatch_size;
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut angle_errors = Vec::with_capacity(cfg.steps);
    let (mut skipped, mut fallback) = (0, 0);

    for step in 0..cfg.steps {
        let mut grads = weights.zeros_like();
        let (mut loss_sum, mut angle_sum, mut used) = (0.0, 0.0, 0usize);
        let mut pending = Vec::with_capacity(n);
        for i in 0..n {
            let s = make_sample(cfg.seed, (step * n + i) as u64, cfg.image_size)?;
            let (raw, cache) = weights.forward(&s.image, &s.warped);
            match loss_head_grad(&s.transform, &raw, cfg) {
                Ok(out) => {
                    if out.status == GradientStatus::FiniteDifference {
                        fallback += 1;
                    }
                    loss_sum += out.loss;
                    if out.theta.is_finite() {
                        angle_sum += out.theta;
                    }
                    used += 1;
                    pending.push((cache, clip(out.grad_raw8, cfg.grad_clip)));
                }
                Err(e) => {
                    debug!("step {step}: skipping sample {i}: {e}");
                    skipped += 1;
                }
            }
        }
        if used == 0 {
            return Err(LieError::Internal(format!(
                "step {step}: every sample in the minibatch was skipped"
            )));
        }
        let loss = loss_sum / used as f64;
        if !loss.is_finite() {
            return Err(LieError::NonFinite(format!("loss {loss} at step {step}")));
        }
        let scale = 1.0 / used as f64;
        for (cache, g) in &pending {
            weights.backward(cache, &g.map(|v| v * scale), &mut grads);
        }
        adam.apply(&mut weights, &grads, &adam_params);
        if !weights.is_finite() {
            return Err(LieError::NonFinite(format!("weights after step {step}")));
        }
        losses.push(loss);
        angle_errors.push(angle_sum / used as f64);
        if (step + 1) % 100 == 0 {
            info!(
                "step {:>5}  loss {loss:.5}  angle {:.4}",
                step + 1,
                angle_sum / used as f64
            );
        }
    }

    let eval = eval_samples(cfg)?;
    let report = TrainReport {
        config: cfg.clone(),
        initial_smoothed_loss: smoothed(&losses, cfg.smoothing_window, false),
        final_smoothed_loss: smoothed(&losses, cfg.smoothing_window, true),
        losses,
        angle_errors,
        skipped_samples: skipped,
        fallback_samples: fallback,
        eval_angle_error_untrained: mean_angle_error(&initial, &eval, cfg),
        eval_angle_error_trained: mean_angle_error(&weights, &eval, cfg),
        initial_weights_digest: initial.digest(),
        weights_digest: weights.digest(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((report, weights))
}
