use serde::{Deserialize, Serialize};

use super::Activation;
use crate::error::Result;
use crate::tensor::Tensor;

/// One-to-one gate: every input cell is scaled by the activation of its own
/// weight. The activated weights are the importance scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    /// `N x F`, one weight per zone and feature.
    pub weights: Tensor,
    pub activation: Activation,
}

impl FeatureImportance {
    pub fn new(n_zones: usize, n_features: usize, activation: Activation) -> Self {
        FeatureImportance {
            weights: Tensor::zeros(&[n_zones, n_features]),
            activation,
        }
    }

    pub fn scores(&self) -> Tensor {
        self.weights.map(|w| self.activation.apply(w))
    }

    /// Returns `(x ∘ σ(W), σ(W))`.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Tensor)> {
        x.expect_shape(self.weights.shape(), "feature importance input")?;
        let scores = self.scores();
        let mut weighted = x.clone();
        for (v, s) in weighted.data_mut().iter_mut().zip(scores.data()) {
            *v *= s;
        }
        weighted.check_finite("feature importance output")?;
        Ok((weighted, scores))
    }

    /// Returns `(dL/dx, dL/dW)`.
    pub fn backward(&self, grad_out: &Tensor, x: &Tensor) -> Result<(Tensor, Tensor)> {
        grad_out.expect_shape(self.weights.shape(), "feature importance grad")?;
        x.expect_shape(self.weights.shape(), "feature importance input")?;
        let mut grad_x = grad_out.clone();
        let mut grad_w = grad_out.clone();
        for i in 0..grad_x.len() {
            let w = self.weights.data()[i];
            grad_x.data_mut()[i] *= self.activation.apply(w);
            grad_w.data_mut()[i] *= x.data()[i] * self.activation.derivative(w);
        }
        grad_x.check_finite("feature importance input grad")?;
        grad_w.check_finite("feature importance weight grad")?;
        Ok((grad_x, grad_w))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nnkernel::gradcheck::finite_difference_check;
    use crate::testutil::rand_tensor as rng_tensor;

    #[test]
    fn zero_weights_halve_input() {
        let fi = FeatureImportance::new(2, 3, Activation::Sigmoid);
        let x = rng_tensor(&[2, 3], 1);
        let (w, s) = fi.forward(&x).unwrap();
        assert!(s.data().iter().all(|&v| v == 0.5));
        for (a, b) in w.data().iter().zip(x.data()) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn zero_input_is_absorbing() {
        let mut fi = FeatureImportance::new(2, 2, Activation::Sigmoid);
        fi.weights = rng_tensor(&[2, 2], 7);
        let (w, _) = fi.forward(&Tensor::zeros(&[2, 2])).unwrap();
        assert!(w.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn log_three_gives_three_quarters() {
        let mut fi = FeatureImportance::new(1, 1, Activation::Sigmoid);
        fi.weights.data_mut()[0] = 3f64.ln();
        let x = Tensor::from_vec(&[1, 1], vec![2.0]).unwrap();
        let (w, s) = fi.forward(&x).unwrap();
        assert!((s.data()[0] - 0.75).abs() < 1e-15);
        assert!((w.data()[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn backward_trivial_cases() {
        let fi = FeatureImportance::new(2, 2, Activation::Sigmoid);
        let x = rng_tensor(&[2, 2], 3);
        let (gx, gw) = fi.backward(&Tensor::zeros(&[2, 2]), &x).unwrap();
        assert!(gx.data().iter().chain(gw.data()).all(|&v| v == 0.0));
        let g = rng_tensor(&[2, 2], 4);
        let (gx, _) = fi.backward(&g, &x).unwrap();
        for (a, b) in gx.data().iter().zip(g.data()) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::Linear] {
            let mut fi = FeatureImportance::new(3, 4, act);
            fi.weights = rng_tensor(&[3, 4], 11);
            let x = rng_tensor(&[3, 4], 12);
            let g = rng_tensor(&[3, 4], 13);
            let loss = |fi: &FeatureImportance, x: &Tensor| {
                let (w, _) = fi.forward(x).unwrap();
                w.data()
                    .iter()
                    .zip(g.data())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            };
            let (gx, gw) = fi.backward(&g, &x).unwrap();
            let err_x = finite_difference_check(
                |p| loss(&fi, &Tensor::from_vec(&[3, 4], p.to_vec()).unwrap()),
                x.data(),
                gx.data(),
                1e-6,
            );
            let err_w = finite_difference_check(
                |p| {
                    let mut f2 = fi.clone();
                    f2.weights = Tensor::from_vec(&[3, 4], p.to_vec()).unwrap();
                    loss(&f2, &x)
                },
                fi.weights.data(),
                gw.data(),
                1e-6,
            );
            assert!(err_x < 1e-6 && err_w < 1e-6, "{act}: {err_x} {err_w}");
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let fi = FeatureImportance::new(2, 3, Activation::Sigmoid);
        assert!(fi.forward(&Tensor::zeros(&[3, 2])).is_err());
    }
}
