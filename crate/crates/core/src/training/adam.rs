use crate::error::{Error, Result};
use crate::focirnet::Network;
use crate::tensor::Tensor;

use super::TrainConfig;

/// Adam optimizer state, one moment pair per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
}

impl Adam {
    pub fn new(net: &Network, config: &TrainConfig) -> Self {
        let zeros: Vec<Tensor> = net
            .params()
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        Adam {
            learning_rate: config.learning_rate,
            beta1: config.adam_beta1,
            beta2: config.adam_beta2,
            eps: config.adam_eps,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update followed by the recurrent-weight clip.
    pub fn step(&mut self, net: &mut Network, grads: &[Tensor]) -> Result<()> {
        if grads.len() != self.m.len() {
            return Err(Error::Shape(format!(
                "{} gradient tensors for {} parameters",
                grads.len(),
                self.m.len()
            )));
        }
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step as i32);
        let c2 = 1.0 - self.beta2.powi(self.step as i32);
        for (((p, g), m), v) in net
            .params_mut()
            .into_iter()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            if p.shape() != g.shape() {
                return Err(Error::Shape("gradient shape differs from parameter".into()));
            }
            let it = p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut().zip(v.data_mut()));
            for ((w, &g), (m, v)) in it {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        constrain_recurrent(net);
        Ok(())
    }
}

/// Applies one update with `state`, see [`Adam::step`].
pub fn adam_step(net: &mut Network, state: &mut Adam, grads: &[Tensor]) -> Result<()> {
    state.step(net, grads)
}

pub fn constrain_recurrent(net: &mut Network) {
    net.constrain_recurrent();
}
