//! Siamese multilayer perceptron: a shared dense encoder applied to the
//! original and the transformed image, followed by a dense decoder on the
//! concatenated features that emits eight homography entries.

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::sampler::{GrayImage, Rng};

/// Number of decoder outputs; the ninth homography entry is fixed to one.
pub const RAW_OUTPUTS: usize = 8;
/// Row-major entries of the identity homography without its last element.
pub const IDENTITY_RAW: [f64; RAW_OUTPUTS] = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];

/// Fully connected layer `y = W x + b`, `W` stored row-major `out × in`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weight: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Weights uniform in `±gain·sqrt(3 / fan_in)`, zero bias.
    pub fn uniform(inputs: usize, outputs: usize, gain: f64, rng: &mut Rng) -> Self {
        let bound = gain * (3.0 / inputs as f64).sqrt();
        let weight = (0..inputs * outputs)
            .map(|_| rng.uniform(-bound, bound))
            .collect();
        Self {
            inputs,
            outputs,
            weight,
            bias: vec![0.0; outputs],
        }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        self.weight
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    /// Accumulates `∂/∂W`, `∂/∂b` into `grad` and returns `∂/∂x`.
    fn backward(&self, x: &[f64], grad_out: &[f64], grad: &mut Dense) -> Vec<f64> {
        let mut grad_in = vec![0.0; self.inputs];
        for (o, &g) in grad_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            grad.bias[o] += g;
            let row = &self.weight[o * self.inputs..(o + 1) * self.inputs];
            let grow = &mut grad.weight[o * self.inputs..(o + 1) * self.inputs];
            for k in 0..self.inputs {
                grow[k] += g * x[k];
                grad_in[k] += g * row[k];
            }
        }
        grad_in
    }

    fn params(&self) -> impl Iterator<Item = &f64> {
        self.weight.iter().chain(&self.bias)
    }
}

/// Encoder and decoder weights. Encoder layers use rectifier activations;
/// hidden decoder layers do too, the decoder output is linear.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelWeights {
    pub encoder: Vec<Dense>,
    pub decoder: Vec<Dense>,
}

/// Layer inputs and pre-activations retained for the backward pass.
#[derive(Clone, Debug)]
pub struct BranchCache {
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub original: BranchCache,
    pub transformed: BranchCache,
    pub decoder: BranchCache,
}

fn relu(v: &mut [f64]) {
    for x in v {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
}

fn relu_mask(pre: &[f64], grad: &mut [f64]) {
    for (g, p) in grad.iter_mut().zip(pre) {
        if *p <= 0.0 {
            *g = 0.0;
        }
    }
}

fn run_stack(layers: &[Dense], x: &[f64], relu_last: bool) -> (Vec<f64>, BranchCache) {
    let mut cache = BranchCache {
        inputs: Vec::with_capacity(layers.len()),
        pre: Vec::with_capacity(layers.len()),
    };
    let mut h = x.to_vec();
    for (k, layer) in layers.iter().enumerate() {
        let pre = layer.forward(&h);
        let mut out = pre.clone();
        if relu_last || k + 1 < layers.len() {
            relu(&mut out);
        }
        cache.inputs.push(h);
        cache.pre.push(pre);
        h = out;
    }
    (h, cache)
}

fn back_stack(
    layers: &[Dense],
    cache: &BranchCache,
    grad_out: &[f64],
    relu_last: bool,
    grads: &mut [Dense],
) -> Vec<f64> {
    let mut g = grad_out.to_vec();
    for k in (0..layers.len()).rev() {
        if relu_last || k + 1 < layers.len() {
            relu_mask(&cache.pre[k], &mut g);
        }
        g = layers[k].backward(&cache.inputs[k], &g, &mut grads[k]);
    }
    g
}

impl ModelWeights {
    /// `encoder_widths` are the output widths of the encoder layers;
    /// `decoder_hidden` are widths of optional hidden decoder layers.
    pub fn init(
        input: usize,
        encoder_widths: &[usize],
        decoder_hidden: &[usize],
        rng: &mut Rng,
    ) -> Self {
        let relu_gain = 2f64.sqrt();
        let mut encoder = Vec::new();
        let mut width = input;
        for &w in encoder_widths {
            encoder.push(Dense::uniform(width, w, relu_gain, rng));
            width = w;
        }
        let mut decoder = Vec::new();
        width *= 2;
        for &w in decoder_hidden {
            decoder.push(Dense::uniform(width, w, relu_gain, rng));
            width = w;
        }
        // Small output weights and an identity bias: the untrained model
        // predicts near-identity transformations.
        let mut out = Dense::uniform(width, RAW_OUTPUTS, 0.01, rng);
        out.bias = IDENTITY_RAW.to_vec();
        decoder.push(out);
        Self { encoder, decoder }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |l: &Dense| Dense::zeros(l.inputs, l.outputs);
        Self {
            encoder: self.encoder.iter().map(z).collect(),
            decoder: self.decoder.iter().map(z).collect(),
        }
    }

    pub fn layers(&self) -> impl Iterator<Item = &Dense> {
        self.encoder.iter().chain(&self.decoder)
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Dense> {
        self.encoder.iter_mut().chain(self.decoder.iter_mut())
    }

    pub fn input_len(&self) -> usize {
        self.encoder.first().map_or(0, |l| l.inputs)
    }

    pub fn feature_len(&self) -> usize {
        self.encoder.last().map_or(0, |l| l.outputs)
    }

    pub fn is_finite(&self) -> bool {
        self.layers().all(|l| l.params().all(|v| v.is_finite()))
    }

    pub fn param_count(&self) -> usize {
        self.layers().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    /// Hex SHA-256 over the little-endian bytes of every parameter.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self.layers().flat_map(|l| l.params()) {
            h.update(v.to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    pub fn encode(&self, x: &[f64]) -> (Vec<f64>, BranchCache) {
        run_stack(&self.encoder, x, true)
    }

    /// Runs both branches through the shared encoder and decodes the
    /// concatenation `[E(x), E(t(x))]`.
    pub fn forward_raw(&self, x: &[f64], tx: &[f64]) -> ([f64; RAW_OUTPUTS], ForwardCache) {
        let (fx, original) = self.encode(x);
        let (ftx, transformed) = self.encode(tx);
        let mut joint = fx;
        joint.extend_from_slice(&ftx);
        let (out, decoder) = run_stack(&self.decoder, &joint, false);
        let mut raw = [0.0; RAW_OUTPUTS];
        raw.copy_from_slice(&out);
        (
            raw,
            ForwardCache {
                original,
                transformed,
                decoder,
            },
        )
    }

    pub fn forward(&self, x: &GrayImage, tx: &GrayImage) -> ([f64; RAW_OUTPUTS], ForwardCache) {
        self.forward_raw(x.pixels(), tx.pixels())
    }

    /// Gradients of `raw · grad_raw` with respect to every parameter,
    /// accumulated into `grads`. The shared encoder receives contributions
    /// from both branches.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_raw: &[f64; RAW_OUTPUTS],
        grads: &mut ModelWeights,
    ) {
        let g_joint = back_stack(
            &self.decoder,
            &cache.decoder,
            grad_raw,
            false,
            &mut grads.decoder,
        );
        let f = self.feature_len();
        back_stack(
            &self.encoder,
            &cache.original,
            &g_joint[..f],
            true,
            &mut grads.encoder,
        );
        back_stack(
            &self.encoder,
            &cache.transformed,
            &g_joint[f..],
            true,
            &mut grads.encoder,
        );
    }

    /// Like [`ModelWeights::backward`] but returns fresh gradients.
    pub fn gradients(&self, cache: &ForwardCache, grad_raw: &[f64; RAW_OUTPUTS]) -> ModelWeights {
        let mut g = self.zeros_like();
        self.backward(cache, grad_raw, &mut g);
        g
    }
}

pub fn forward(
    weights: &ModelWeights,
    x: &GrayImage,
    tx: &GrayImage,
) -> ([f64; RAW_OUTPUTS], ForwardCache) {
    weights.forward(x, tx)
}

pub fn backward(
    weights: &ModelWeights,
    cache: &ForwardCache,
    grad_raw: &[f64; RAW_OUTPUTS],
) -> ModelWeights {
    weights.gradients(cache, grad_raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(rng: &mut Rng, hidden: &[usize]) -> ModelWeights {
        let mut m = ModelWeights::init(2, &[3, 2], hidden, rng);
        // Non-trivial output layer so every path carries gradient.
        for v in m.decoder.last_mut().unwrap().weight.iter_mut() {
            *v = rng.uniform(-1.0, 1.0);
        }
        for l in m.layers_mut() {
            for b in l.bias.iter_mut() {
                *b += rng.uniform(-0.3, 0.3);
            }
        }
        m
    }

    fn objective(m: &ModelWeights, x: &[f64], tx: &[f64], g: &[f64; 8]) -> f64 {
        let (raw, _) = m.forward_raw(x, tx);
        raw.iter().zip(g).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn zero_weights_output_bias() {
        let mut rng = Rng::new(1);
        let mut m = ModelWeights::init(16, &[4, 3], &[], &mut rng);
        for l in m.layers_mut() {
            l.weight.iter_mut().for_each(|w| *w = 0.0);
        }
        let bias: Vec<f64> = m.decoder[0].bias.clone();
        let x: Vec<f64> = (0..16).map(|k| k as f64 / 16.0).collect();
        let (raw, _) = m.forward_raw(&x, &x);
        assert_eq!(raw.to_vec(), bias);
    }

    #[test]
    fn siamese_swap_permutes_halves() {
        let mut rng = Rng::new(2);
        let m = ModelWeights::init(16, &[6, 4], &[], &mut rng);
        let x: Vec<f64> = (0..16).map(|_| rng.uniform(0.0, 1.0)).collect();
        let y: Vec<f64> = (0..16).map(|_| rng.uniform(0.0, 1.0)).collect();
        let (fx, _) = m.encode(&x);
        let (fy, _) = m.encode(&y);
        let (_, c1) = m.forward_raw(&x, &y);
        let (_, c2) = m.forward_raw(&y, &x);
        let j1 = &c1.decoder.inputs[0];
        let j2 = &c2.decoder.inputs[0];
        assert_eq!(&j1[..4], &fx[..]);
        assert_eq!(&j1[4..], &fy[..]);
        assert_eq!(&j2[..4], &j1[4..]);
        assert_eq!(&j2[4..], &j1[..4]);
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = Rng::new(3);
        let m = tiny(&mut rng, &[]);
        let (_, cache) = m.forward_raw(&[0.3, 0.8], &[0.6, 0.1]);
        let g = m.gradients(&cache, &[0.0; 8]);
        assert!(g.layers().all(|l| l.params().all(|v| *v == 0.0)));
    }

    #[test]
    fn decoder_bias_gradient_is_upstream() {
        let mut rng = Rng::new(4);
        let m = tiny(&mut rng, &[]);
        let (_, cache) = m.forward_raw(&[0.3, 0.8], &[0.6, 0.1]);
        let up = [0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8];
        let g = m.gradients(&cache, &up);
        assert_eq!(g.decoder.last().unwrap().bias, up.to_vec());
    }

    #[test]
    fn backward_matches_finite_differences() {
        for (seed, hidden) in [(5u64, vec![]), (6, vec![4])] {
            let mut rng = Rng::new(seed);
            let m = tiny(&mut rng, &hidden);
            let x = [rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)];
            let tx = [rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)];
            let up: [f64; 8] = std::array::from_fn(|_| rng.uniform(-1.0, 1.0));
            let (_, cache) = m.forward_raw(&x, &tx);
            let g = m.gradients(&cache, &up);
            let h = 1e-6;
            let n_layers = m.layers().count();
            for li in 0..n_layers {
                let len = m.layers().nth(li).unwrap().weight.len();
                for wi in 0..len {
                    let mut p = m.clone();
                    p.layers_mut().nth(li).unwrap().weight[wi] += h;
                    let mut q = m.clone();
                    q.layers_mut().nth(li).unwrap().weight[wi] -= h;
                    let fd =
                        (objective(&p, &x, &tx, &up) - objective(&q, &x, &tx, &up)) / (2.0 * h);
                    let an = g.layers().nth(li).unwrap().weight[wi];
                    assert!(
                        (fd - an).abs() <= 1e-5 * fd.abs().max(an.abs()) + 1e-8,
                        "layer {li} w{wi}: {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn encoder_gradient_sums_both_branches() {
        let mut rng = Rng::new(7);
        let m = tiny(&mut rng, &[]);
        let (_, cache) = m.forward_raw(&[0.9, 0.2], &[0.4, 0.7]);
        let up: [f64; 8] = std::array::from_fn(|_| rng.uniform(-1.0, 1.0));
        let full = m.gradients(&cache, &up);

        let g_joint = {
            let mut scratch = m.zeros_like();
            back_stack(&m.decoder, &cache.decoder, &up, false, &mut scratch.decoder)
        };
        let f = m.feature_len();
        let mut only_x = m.zeros_like();
        back_stack(
            &m.encoder,
            &cache.original,
            &g_joint[..f],
            true,
            &mut only_x.encoder,
        );
        let mut only_tx = m.zeros_like();
        back_stack(
            &m.encoder,
            &cache.transformed,
            &g_joint[f..],
            true,
            &mut only_tx.encoder,
        );
        for k in 0..m.encoder.len() {
            for i in 0..m.encoder[k].weight.len() {
                let sum = only_x.encoder[k].weight[i] + only_tx.encoder[k].weight[i];
                assert!((full.encoder[k].weight[i] - sum).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn finite_outputs_fuzz() {
        let mut rng = Rng::new(8);
        let m = ModelWeights::init(64, &[16, 8], &[], &mut rng);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..64).map(|_| rng.uniform(0.0, 1.0)).collect();
            let y: Vec<f64> = (0..64).map(|_| rng.uniform(0.0, 1.0)).collect();
            assert!(m.forward_raw(&x, &y).0.iter().all(|v| v.is_finite()));
        }
    }
}
