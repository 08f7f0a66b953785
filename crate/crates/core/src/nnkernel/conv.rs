use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// 1D convolution sliding along the zone axis with stride one and zero
/// "same" padding, so the output keeps the input's zone extent. Implemented
/// as cross-correlation (no filter flip). No pooling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conv1d {
    /// `K x E x F_in`.
    pub filters: Tensor,
    /// One scalar per filter, broadcast over zones.
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Conv1dCache {
    x: Tensor,
    pre: Tensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dGrads {
    pub x: Tensor,
    pub filters: Tensor,
    pub bias: Tensor,
}

impl Conv1d {
    pub fn new(
        n_filters: usize,
        filter_len: usize,
        in_features: usize,
        activation: Activation,
    ) -> Result<Self> {
        if filter_len.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "filter length {filter_len} must be odd for symmetric padding"
            )));
        }
        Ok(Conv1d {
            filters: Tensor::zeros(&[n_filters, filter_len, in_features]),
            bias: Tensor::zeros(&[n_filters]),
            activation,
        })
    }

    pub fn n_filters(&self) -> usize {
        self.filters.shape()[0]
    }

    pub fn filter_len(&self) -> usize {
        self.filters.shape()[1]
    }

    pub fn in_features(&self) -> usize {
        self.filters.shape()[2]
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if self.filter_len().is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "filter length {} must be odd",
                self.filter_len()
            )));
        }
        if x.shape().len() != 2 || x.cols() != self.in_features() {
            return Err(Error::Shape(format!(
                "conv1d expects N x {}, got {:?}",
                self.in_features(),
                x.shape()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Conv1dCache)> {
        self.check(x)?;
        let (n, f_in) = (x.rows(), self.in_features());
        let (k_count, e_len) = (self.n_filters(), self.filter_len());
        let pad = e_len / 2;
        let w = self.filters.data();
        let mut pre = Tensor::zeros(&[n, k_count]);
        for p in 0..n {
            let out = pre.row_mut(p);
            out.copy_from_slice(self.bias.data());
            for e in 0..e_len {
                let Some(q) = (p + e).checked_sub(pad).filter(|&q| q < n) else {
                    continue;
                };
                let xr = x.row(q);
                for (k, o) in out.iter_mut().enumerate() {
                    let wr = &w[(k * e_len + e) * f_in..(k * e_len + e + 1) * f_in];
                    *o += wr.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        let out = pre.map(|v| self.activation.apply(v));
        out.check_finite("conv1d output")?;
        Ok((out, Conv1dCache { x: x.clone(), pre }))
    }

    pub fn backward(&self, grad_out: &Tensor, cache: &Conv1dCache) -> Result<Conv1dGrads> {
        let x = &cache.x;
        let (n, f_in) = (x.rows(), self.in_features());
        let (k_count, e_len) = (self.n_filters(), self.filter_len());
        grad_out.expect_shape(&[n, k_count], "conv1d grad")?;
        let pad = e_len / 2;
        let w = self.filters.data();

        let mut g = grad_out.clone();
        for (gv, z) in g.data_mut().iter_mut().zip(cache.pre.data()) {
            *gv *= self.activation.derivative(*z);
        }
        let mut grad_x = Tensor::zeros(x.shape());
        let mut grad_w = Tensor::zeros(self.filters.shape());
        let mut grad_b = Tensor::zeros(&[k_count]);
        for p in 0..n {
            let gr = g.row(p);
            for (b, v) in grad_b.data_mut().iter_mut().zip(gr) {
                *b += v;
            }
            for e in 0..e_len {
                let Some(q) = (p + e).checked_sub(pad).filter(|&q| q < n) else {
                    continue;
                };
                let xr = x.row(q);
                for (k, &gk) in gr.iter().enumerate() {
                    if gk == 0.0 {
                        continue;
                    }
                    let off = (k * e_len + e) * f_in;
                    let gw = &mut grad_w.data_mut()[off..off + f_in];
                    for (a, b) in gw.iter_mut().zip(xr) {
                        *a += gk * b;
                    }
                    let wr = &w[off..off + f_in];
                    let gx = grad_x.row_mut(q);
                    for (a, b) in gx.iter_mut().zip(wr) {
                        *a += gk * b;
                    }
                }
            }
        }
        grad_x.check_finite("conv1d input grad")?;
        grad_w.check_finite("conv1d filter grad")?;
        Ok(Conv1dGrads {
            x: grad_x,
            filters: grad_w,
            bias: grad_b,
        })
    }
}
