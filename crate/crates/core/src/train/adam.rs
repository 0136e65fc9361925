use super::model::ModelWeights;

/// Adam moments, one buffer per parameter of a [`ModelWeights`].
#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: ModelWeights,
    pub v: ModelWeights,
    pub step: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

fn update(
    w: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    p: &AdamParams,
    c1: f64,
    c2: f64,
    decay: bool,
) {
    for k in 0..w.len() {
        m[k] = p.beta1 * m[k] + (1.0 - p.beta1) * g[k];
        v[k] = p.beta2 * v[k] + (1.0 - p.beta2) * g[k] * g[k];
        let step = (m[k] / c1) / ((v[k] / c2).sqrt() + p.epsilon);
        let wd = if decay { p.weight_decay * w[k] } else { 0.0 };
        w[k] -= p.learning_rate * (step + wd);
    }
}

impl AdamState {
    pub fn new(weights: &ModelWeights) -> Self {
        Self {
            m: weights.zeros_like(),
            v: weights.zeros_like(),
            step: 0,
        }
    }

    /// One bias-corrected Adam step. Weight decay is decoupled from the
    /// moments and applied to weight matrices only.
    pub fn apply(&mut self, weights: &mut ModelWeights, grads: &ModelWeights, p: &AdamParams) {
        self.step += 1;
        let c1 = 1.0 - p.beta1.powi(self.step as i32);
        let c2 = 1.0 - p.beta2.powi(self.step as i32);
        let layers = weights
            .layers_mut()
            .zip(grads.layers())
            .zip(self.m.layers_mut().zip(self.v.layers_mut()));
        for ((w, g), (m, v)) in layers {
            update(
                &mut w.weight,
                &g.weight,
                &mut m.weight,
                &mut v.weight,
                p,
                c1,
                c2,
                true,
            );
            update(
                &mut w.bias,
                &g.bias,
                &mut m.bias,
                &mut v.bias,
                p,
                c1,
                c2,
                false,
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::Rng;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut rng = Rng::new(1);
        let mut w = ModelWeights::init(4, &[3], &[], &mut rng);
        let before = w.clone();
        let mut g = w.zeros_like();
        for l in g.layers_mut() {
            l.weight.iter_mut().for_each(|x| *x = 0.5);
            l.bias.iter_mut().for_each(|x| *x = -2.0);
        }
        let p = AdamParams {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-12,
            weight_decay: 0.0,
        };
        let mut adam = AdamState::new(&w);
        adam.apply(&mut w, &g, &p);
        assert_eq!(adam.step, 1);
        for (a, b) in w.layers().zip(before.layers()) {
            for (x, y) in a.weight.iter().zip(&b.weight) {
                assert!((y - x - 0.01).abs() < 1e-9);
            }
            for (x, y) in a.bias.iter().zip(&b.bias) {
                assert!((x - y - 0.01).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn decay_shrinks_weights_not_biases() {
        let mut rng = Rng::new(2);
        let mut w = ModelWeights::init(4, &[3], &[], &mut rng);
        let before = w.clone();
        let g = w.zeros_like();
        let p = AdamParams {
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.5,
        };
        AdamState::new(&w).apply(&mut w, &g, &p);
        for (a, b) in w.layers().zip(before.layers()) {
            for (x, y) in a.weight.iter().zip(&b.weight) {
                assert!((x - 0.95 * y).abs() < 1e-15);
            }
            assert_eq!(a.bias, b.bias);
        }
    }
}
