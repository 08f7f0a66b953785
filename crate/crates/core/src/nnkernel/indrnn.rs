//! Independently recurrent layers: each hidden unit sees only its own
//! previous state, `h_t = σ(U·x_t + w ∘ h_{t-1} + b)`.

use serde::{Deserialize, Serialize};

use super::dense::dot;
use super::Activation;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Largest admissible `|w|` for a recurrent weight unrolled over `lookback`
/// steps: `2^(1/b)` under ReLU, 1 under tanh.
pub fn recurrent_bound(activation: Activation, lookback: usize) -> Result<f64> {
    match activation {
        Activation::Relu => Ok(2f64.powf(1.0 / lookback.max(1) as f64)),
        Activation::Tanh => Ok(1.0),
        other => Err(Error::Config(format!(
            "recurrent activation must be relu or tanh, got {other}"
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndRnnLayer {
    /// `H x F_in`.
    pub input_weights: Tensor,
    /// Length `H`, elementwise recurrence.
    pub recurrent_weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
    pub recurrent_bound: f64,
}

impl IndRnnLayer {
    pub fn new(
        in_features: usize,
        hidden: usize,
        activation: Activation,
        recurrent_bound: f64,
    ) -> Self {
        IndRnnLayer {
            input_weights: Tensor::zeros(&[hidden, in_features]),
            recurrent_weights: Tensor::zeros(&[hidden]),
            bias: Tensor::zeros(&[hidden]),
            activation,
            recurrent_bound,
        }
    }

    pub fn hidden(&self) -> usize {
        self.input_weights.shape()[0]
    }

    pub fn in_features(&self) -> usize {
        self.input_weights.shape()[1]
    }

    /// Clips every recurrent weight into `[-bound, bound]`.
    pub fn constrain(&mut self) {
        let b = self.recurrent_bound;
        self.recurrent_weights
            .data_mut()
            .iter_mut()
            .for_each(|w| *w = w.clamp(-b, b));
    }

    pub fn within_bound(&self) -> bool {
        self.recurrent_weights
            .data()
            .iter()
            .all(|w| w.abs() <= self.recurrent_bound)
    }

    fn pre_activation(&self, x_t: &[f64], h_prev: &[f64], out: &mut [f64]) {
        let w = self.recurrent_weights.data();
        let b = self.bias.data();
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.input_weights.row(i), x_t) + w[i] * h_prev[i] + b[i];
        }
    }

    /// One recurrence step.
    pub fn step(&self, x_t: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        if x_t.len() != self.in_features() || h_prev.len() != self.hidden() {
            return Err(Error::Shape(format!(
                "indrnn step expects x of {} and h of {}, got {} and {}",
                self.in_features(),
                self.hidden(),
                x_t.len(),
                h_prev.len()
            )));
        }
        let mut h = vec![0.0; self.hidden()];
        self.pre_activation(x_t, h_prev, &mut h);
        h.iter_mut().for_each(|v| *v = self.activation.apply(*v));
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("indrnn state".into()));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndRnnGrads {
    pub input_weights: Tensor,
    pub recurrent_weights: Tensor,
    pub bias: Tensor,
}

/// Per layer, `N x b x H` pre-activations and states.
#[derive(Debug, Clone)]
pub struct IndRnnCache {
    x: Tensor,
    pre: Vec<Vec<f64>>,
    states: Vec<Vec<f64>>,
}

/// A stack of IndRNN layers run over every zone independently with the same
/// parameters. Input is `N x F_in x b` with the step axis oldest first;
/// output is the top layer's last state per zone, `N x H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneDistributedIndRnn {
    pub layers: Vec<IndRnnLayer>,
}

impl ZoneDistributedIndRnn {
    pub fn hidden(&self) -> usize {
        self.layers.last().map_or(0, IndRnnLayer::hidden)
    }

    fn check(&self, x: &Tensor) -> Result<(usize, usize, usize)> {
        let first = self
            .layers
            .first()
            .ok_or_else(|| Error::Shape("empty IndRNN stack".into()))?;
        let &[n, f, b] = x.shape() else {
            return Err(Error::Shape(format!(
                "IndRNN input must be N x F x b, got {:?}",
                x.shape()
            )));
        };
        if b == 0 {
            return Err(Error::Shape("IndRNN needs at least one step".into()));
        }
        if f != first.in_features() {
            return Err(Error::Shape(format!(
                "IndRNN expects {} input features, got {f}",
                first.in_features()
            )));
        }
        for w in self.layers.windows(2) {
            if w[1].in_features() != w[0].hidden() {
                return Err(Error::Shape("IndRNN layer widths do not chain".into()));
            }
        }
        Ok((n, f, b))
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, IndRnnCache)> {
        let (n, f, b) = self.check(x)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut states: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut x_t = vec![0.0; f];
        for (l, layer) in self.layers.iter().enumerate() {
            let h = layer.hidden();
            let mut z = vec![0.0; n * b * h];
            let mut hs = vec![0.0; n * b * h];
            let zero = vec![0.0; h];
            for p in 0..n {
                for s in 0..b {
                    let input: &[f64] = if l == 0 {
                        let row = x.row(p);
                        for (j, v) in x_t.iter_mut().enumerate() {
                            *v = row[j * b + s];
                        }
                        &x_t
                    } else {
                        let hp = self.layers[l - 1].hidden();
                        let off = (p * b + s) * hp;
                        &states[l - 1][off..off + hp]
                    };
                    let off = (p * b + s) * h;
                    let h_prev = if s == 0 {
                        zero.clone()
                    } else {
                        hs[off - h..off].to_vec()
                    };
                    layer.pre_activation(input, &h_prev, &mut z[off..off + h]);
                    for i in off..off + h {
                        hs[i] = layer.activation.apply(z[i]);
                    }
                }
            }
            pre.push(z);
            states.push(hs);
        }
        let top = states.last().expect("non-empty stack");
        let h = self.hidden();
        let mut out = Tensor::zeros(&[n, h]);
        for p in 0..n {
            let off = (p * b + b - 1) * h;
            out.row_mut(p).copy_from_slice(&top[off..off + h]);
        }
        out.check_finite("IndRNN output")?;
        Ok((
            out,
            IndRnnCache {
                x: x.clone(),
                pre,
                states,
            },
        ))
    }

    /// Backpropagation through time, summed over zones. Returns the input
    /// gradient (`N x F_in x b`) and one gradient set per layer.
    pub fn backward(
        &self,
        grad_out: &Tensor,
        cache: &IndRnnCache,
    ) -> Result<(Tensor, Vec<IndRnnGrads>)> {
        let x = &cache.x;
        let (n, f, b) = self.check(x)?;
        grad_out.expect_shape(&[n, self.hidden()], "IndRNN grad")?;

        let mut grads: Vec<IndRnnGrads> = self
            .layers
            .iter()
            .map(|l| IndRnnGrads {
                input_weights: Tensor::zeros(l.input_weights.shape()),
                recurrent_weights: Tensor::zeros(&[l.hidden()]),
                bias: Tensor::zeros(&[l.hidden()]),
            })
            .collect();
        let mut grad_x = Tensor::zeros(&[n, f, b]);

        // dL/dh for the current layer's states, N x b x H
        let top_h = self.hidden();
        let mut d_states = vec![0.0; n * b * top_h];
        for p in 0..n {
            let off = (p * b + b - 1) * top_h;
            d_states[off..off + top_h].copy_from_slice(grad_out.row(p));
        }

        let mut x_t = vec![0.0; f];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let h = layer.hidden();
            let f_in = layer.in_features();
            let w = layer.recurrent_weights.data();
            let z = &cache.pre[l];
            let hs = &cache.states[l];
            let mut d_below = if l > 0 {
                vec![0.0; n * b * f_in]
            } else {
                Vec::new()
            };
            let g = &mut grads[l];
            let mut dz = vec![0.0; h];
            for p in 0..n {
                let mut carry = vec![0.0; h];
                for s in (0..b).rev() {
                    let off = (p * b + s) * h;
                    for i in 0..h {
                        let dh = d_states[off + i] + carry[i];
                        dz[i] = dh * layer.activation.derivative(z[off + i]);
                    }
                    let input: &[f64] = if l == 0 {
                        let row = x.row(p);
                        for (j, v) in x_t.iter_mut().enumerate() {
                            *v = row[j * b + s];
                        }
                        &x_t
                    } else {
                        let hp = f_in;
                        let o = (p * b + s) * hp;
                        &cache.states[l - 1][o..o + hp]
                    };
                    let mut d_in = vec![0.0; f_in];
                    for i in 0..h {
                        let d = dz[i];
                        if d == 0.0 {
                            carry[i] = 0.0;
                            continue;
                        }
                        g.bias.data_mut()[i] += d;
                        if s > 0 {
                            g.recurrent_weights.data_mut()[i] += d * hs[off - h + i];
                        }
                        carry[i] = d * w[i];
                        for (a, v) in g.input_weights.row_mut(i).iter_mut().zip(input) {
                            *a += d * v;
                        }
                        for (a, u) in d_in.iter_mut().zip(layer.input_weights.row(i)) {
                            *a += d * u;
                        }
                    }
                    if l == 0 {
                        let row = grad_x.row_mut(p);
                        for (j, v) in d_in.iter().enumerate() {
                            row[j * b + s] += v;
                        }
                    } else {
                        let o = (p * b + s) * f_in;
                        for (a, v) in d_below[o..o + f_in].iter_mut().zip(&d_in) {
                            *a += v;
                        }
                    }
                }
            }
            d_states = d_below;
        }
        grad_x.check_finite("IndRNN input grad")?;
        for g in &grads {
            g.input_weights.check_finite("IndRNN weight grad")?;
            g.recurrent_weights.check_finite("IndRNN recurrent grad")?;
        }
        Ok((grad_x, grads))
    }
}
