//! Fully-connected network with ReLU hidden units and a sigmoid output.
//! Logistic regression is the special case with no hidden layers.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[o];
            out.push(z);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    layers: Vec<Dense>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Network {
    /// All-zero parameters for the given layout.
    pub fn zeros(input_dim: usize, hidden: &[usize]) -> Self {
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut fan_in = input_dim;
        for &h in hidden.iter().chain(std::iter::once(&1)) {
            layers.push(Dense::zeros(fan_in, h));
            fan_in = h;
        }
        Network { layers }
    }

    /// Weights uniform in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`;
    /// biases zero.
    pub fn glorot<R: Rng>(input_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut net = Self::zeros(input_dim, hidden);
        for layer in &mut net.layers {
            let r = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-r..=r);
            }
        }
        net
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn hidden_layout(&self) -> Vec<usize> {
        self.layers[..self.layers.len() - 1]
            .iter()
            .map(|l| l.outputs)
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer, weights before bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_params(), "parameter vector length");
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&params[k..k + nw]);
            k += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&params[k..k + nb]);
            k += nb;
        }
    }

    /// Pre-sigmoid output.
    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.forward(&cur, &mut next);
            if i < last {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Weighted binary cross-entropy averaged over the batch, plus
    /// `l2 / 2 * ||weights||^2` (biases are not penalized).
    /// Returns the loss and its gradient in [`Network::params`] order.
    pub fn loss_and_gradient(
        &self,
        xs: &[&[f64]],
        ys: &[f64],
        weights: Option<&[f64]>,
        l2: f64,
    ) -> (f64, Vec<f64>) {
        let n = xs.len();
        debug_assert_eq!(n, ys.len());
        let mut grads: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs, l.outputs))
            .collect();
        let mut loss = 0.0;
        let inv_n = 1.0 / n as f64;
        let last = self.layers.len() - 1;
        // activations[0] is the input; activations[i + 1] is layer i's post-activation output
        let mut activations: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];
        let mut delta: Vec<f64> = Vec::new();
        let mut prev_delta: Vec<f64> = Vec::new();

        for (s, (&x, &y)) in xs.iter().zip(ys).enumerate() {
            let w = weights.map_or(1.0, |ws| ws[s]);
            activations[0].clear();
            activations[0].extend_from_slice(x);
            for (i, layer) in self.layers.iter().enumerate() {
                let (head, tail) = activations.split_at_mut(i + 1);
                layer.forward(&head[i], &mut tail[0]);
                if i < last {
                    for v in &mut tail[0] {
                        *v = v.max(0.0);
                    }
                }
            }
            let z = activations[last + 1][0];
            loss += w * (softplus(z) - y * z) * inv_n;

            delta.clear();
            delta.push(w * (sigmoid(z) - y) * inv_n);
            for i in (0..self.layers.len()).rev() {
                let layer = &self.layers[i];
                let g = &mut grads[i];
                let input = &activations[i];
                for o in 0..layer.outputs {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, &a) in row.iter_mut().zip(input) {
                        *gw += d * a;
                    }
                }
                if i > 0 {
                    prev_delta.clear();
                    prev_delta.resize(layer.inputs, 0.0);
                    for o in 0..layer.outputs {
                        let d = delta[o];
                        if d == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (pd, &wv) in prev_delta.iter_mut().zip(row) {
                            *pd += d * wv;
                        }
                    }
                    // ReLU derivative, taken as 0 at exactly 0
                    for (pd, &a) in prev_delta.iter_mut().zip(input) {
                        if a <= 0.0 {
                            *pd = 0.0;
                        }
                    }
                    std::mem::swap(&mut delta, &mut prev_delta);
                }
            }
        }

        if l2 > 0.0 {
            for (layer, g) in self.layers.iter().zip(&mut grads) {
                for (gw, &wv) in g.weights.iter_mut().zip(&layer.weights) {
                    loss += 0.5 * l2 * wv * wv;
                    *gw += l2 * wv;
                }
            }
        }

        let mut flat = Vec::with_capacity(self.n_params());
        for g in grads {
            flat.extend(g.weights);
            flat.extend(g.bias);
        }
        (loss, flat)
    }
}
