use crate::dataset::InputSample;
use crate::error::{Error, Result};
use crate::focirnet::{Network, ParamKind};
use crate::tensor::Tensor;

use super::TrainConfig;

/// Mean squared error over all cells.
pub fn data_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "prediction has {} cells, target {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.is_empty() {
        return Ok(0.0);
    }
    let sse: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sse / pred.len() as f64)
}

/// `α·Σ w²` over every parameter outside the feature-importance gate (biases
/// included) plus `β·Σ |w|` over the gate weights.
pub fn regularization(net: &Network, l2_alpha: f64, l1_beta: f64) -> f64 {
    let mut l2 = 0.0;
    let mut l1 = 0.0;
    for (g, t) in net.param_groups().iter().zip(net.params()) {
        match g.kind {
            ParamKind::Importance => l1 += t.data().iter().map(|w| w.abs()).sum::<f64>(),
            _ => l2 += t.data().iter().map(|w| w * w).sum::<f64>(),
        }
    }
    l2_alpha * l2 + l1_beta * l1
}

/// Adds the regularization gradient to `grads` (in parameter order). The
/// L1 subgradient at zero is taken as zero.
pub fn regularization_grads(net: &Network, grads: &mut [Tensor], l2_alpha: f64, l1_beta: f64) {
    for ((g, t), dst) in net.param_groups().iter().zip(net.params()).zip(grads) {
        for (d, &w) in dst.data_mut().iter_mut().zip(t.data()) {
            *d += match g.kind {
                ParamKind::Importance => {
                    if w > 0.0 {
                        l1_beta
                    } else if w < 0.0 {
                        -l1_beta
                    } else {
                        0.0
                    }
                }
                _ => 2.0 * l2_alpha * w,
            };
        }
    }
}

/// Regularized objective for one prediction.
pub fn loss(pred: &[f64], target: &[f64], net: &Network, config: &TrainConfig) -> Result<f64> {
    Ok(data_loss(pred, target)? + regularization(net, config.l2_alpha, config.l1_beta))
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    /// Data term plus regularization.
    pub loss: f64,
    /// Mean squared error over the batch's cells.
    pub data_loss: f64,
    pub grads: Vec<Tensor>,
}

/// Loss and parameter gradients over a batch. The data term averages over
/// every zone-slot cell of the batch. Per-sample gradients are summed in
/// batch order.
pub fn batch_gradients(
    net: &Network,
    batch: &[&InputSample],
    config: &TrainConfig,
) -> Result<BatchResult> {
    if batch.is_empty() {
        return Err(Error::Data("empty batch".into()));
    }
    let cells = (batch.len() * net.n_zones) as f64;
    let mut grads: Vec<Tensor> = net
        .params()
        .iter()
        .map(|t| Tensor::zeros(t.shape()))
        .collect();
    let mut sse = 0.0;
    for sample in batch {
        let (pred, cache) = net.forward_cached(&sample.x)?;
        if sample.target.len() != pred.len() {
            return Err(Error::Shape("target length differs from zone count".into()));
        }
        let d: Vec<f64> = pred
            .iter()
            .zip(&sample.target)
            .map(|(p, a)| {
                sse += (p - a) * (p - a);
                2.0 * (p - a) / cells
            })
            .collect();
        for (acc, g) in grads.iter_mut().zip(net.backward(&cache, &d)?) {
            acc.add_assign(&g);
        }
    }
    regularization_grads(net, &mut grads, config.l2_alpha, config.l1_beta);
    let data = sse / cells;
    let total = data + regularization(net, config.l2_alpha, config.l1_beta);
    if !total.is_finite() {
        return Err(Error::NonFinite(format!("training loss ({total})")));
    }
    for g in &grads {
        g.check_finite("parameter gradient")?;
    }
    Ok(BatchResult {
        loss: total,
        data_loss: data,
        grads,
    })
}
