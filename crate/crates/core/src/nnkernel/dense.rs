use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::Result;
use crate::tensor::Tensor;

/// Fully connected layer applied to every zone row with shared weights:
/// `out[p,:] = σ(W · x[p,:] + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    /// `H_out x F_in`.
    pub weights: Tensor,
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache {
    x: Tensor,
    pre: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub x: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, activation: Activation) -> Self {
        Dense {
            weights: Tensor::zeros(&[out_features, in_features]),
            bias: Tensor::zeros(&[out_features]),
            activation,
        }
    }

    pub fn in_features(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn out_features(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, DenseCache)> {
        let (n, f_in, h) = (x.rows(), self.in_features(), self.out_features());
        x.expect_shape(&[n, f_in], "dense input")?;
        let mut pre = Tensor::zeros(&[n, h]);
        for p in 0..n {
            let xr = x.row(p);
            let out = pre.row_mut(p);
            for (j, o) in out.iter_mut().enumerate() {
                *o = self.bias.data()[j] + dot(self.weights.row(j), xr);
            }
        }
        let out = pre.map(|v| self.activation.apply(v));
        out.check_finite("dense output")?;
        Ok((out, DenseCache { x: x.clone(), pre }))
    }

    pub fn backward(&self, grad_out: &Tensor, cache: &DenseCache) -> Result<DenseGrads> {
        let x = &cache.x;
        let (n, f_in, h) = (x.rows(), self.in_features(), self.out_features());
        grad_out.expect_shape(&[n, h], "dense grad")?;
        let mut grad_x = Tensor::zeros(&[n, f_in]);
        let mut grad_w = Tensor::zeros(&[h, f_in]);
        let mut grad_b = Tensor::zeros(&[h]);
        for p in 0..n {
            let xr = x.row(p);
            for j in 0..h {
                let g = grad_out.at2(p, j) * self.activation.derivative(cache.pre.at2(p, j));
                if g == 0.0 {
                    continue;
                }
                grad_b.data_mut()[j] += g;
                for (a, b) in grad_w.row_mut(j).iter_mut().zip(xr) {
                    *a += g * b;
                }
                for (a, b) in grad_x.row_mut(p).iter_mut().zip(self.weights.row(j)) {
                    *a += g * b;
                }
            }
        }
        grad_x.check_finite("dense input grad")?;
        grad_w.check_finite("dense weight grad")?;
        Ok(DenseGrads {
            x: grad_x,
            weights: grad_w,
            bias: grad_b,
        })
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
