use serde::{Deserialize, Serialize};

use crate::error::{LieError, Result};
use crate::lie::{AnglePower, SurrogateConfig};

/// Which loss drives the decoder.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    #[default]
    GdtSurrogate,
    Mse,
}

impl std::str::FromStr for LossKind {
    type Err = LieError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gdt_surrogate" | "gdt" | "surrogate" => Ok(Self::GdtSurrogate),
            "mse" => Ok(Self::Mse),
            _ => Err(LieError::Config(format!("unknown loss kind {s:?}"))),
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::GdtSurrogate => "gdt_surrogate",
            Self::Mse => "mse",
        })
    }
}

/// Hyperparameters of a training run. Missing keys take their defaults when
/// deserialised; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub minibatch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Decoupled decay applied to weight matrices (not biases).
    pub weight_decay: f64,
    pub lambda: f64,
    pub loss_kind: LossKind,
    pub angle_power: AnglePower,
    pub image_size: usize,
    pub encoder_widths: Vec<usize>,
    /// Hidden decoder layers; empty means a single linear decoder layer,
    /// which can only add the two embeddings and learns rotations poorly.
    pub decoder_hidden: Vec<usize>,
    pub seed: u64,
    /// Held-out pairs used to compare the trained and untrained model.
    pub eval_pairs: usize,
    /// Per-sample bound on the norm of the gradient with respect to the eight
    /// decoder outputs; `None` disables clipping.
    pub grad_clip: Option<f64>,
    /// Window of the smoothed initial and final loss.
    pub smoothing_window: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            minibatch_size: 32,
            steps: 2000,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 5e-4,
            lambda: 1.0,
            loss_kind: LossKind::GdtSurrogate,
            angle_power: AnglePower::One,
            image_size: 32,
            encoder_widths: vec![64, 32],
            decoder_hidden: vec![64],
            seed: 1,
            eval_pairs: 512,
            grad_clip: Some(1.0),
            smoothing_window: 100,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(LieError::Config(msg));
        if self.minibatch_size == 0 {
            return fail("minibatch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return fail(format!("{name} must lie in (0, 1), got {b}"));
            }
        }
        if !(self.epsilon > 0.0) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return fail(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            ));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return fail(format!("lambda must be positive, got {}", self.lambda));
        }
        if self.image_size < 8 {
            return fail(format!(
                "image_size must be at least 8, got {}",
                self.image_size
            ));
        }
        if self.encoder_widths.is_empty() || self.encoder_widths.contains(&0) {
            return fail("encoder_widths must be non-empty and positive".into());
        }
        if self.decoder_hidden.contains(&0) {
            return fail("decoder_hidden widths must be positive".into());
        }
        if let Some(c) = self.grad_clip {
            if !(c > 0.0) {
                return fail(format!("grad_clip must be positive, got {c}"));
            }
        }
        if self.smoothing_window == 0 {
            return fail("smoothing_window must be at least 1".into());
        }
        Ok(())
    }

    pub fn surrogate(&self) -> SurrogateConfig {
        SurrogateConfig {
            lambda: self.lambda,
            angle_power: self.angle_power,
        }
    }
}
