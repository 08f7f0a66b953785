use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{batch_gradients, data_loss, Adam};
use crate::dataset::InputSample;
use crate::error::{Error, Result};
use crate::focirnet::Network;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2_alpha: f64,
    pub l1_beta: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            batch_size: 32,
            l2_alpha: 0.001,
            l1_beta: 0.001,
            patience: 100,
            max_epochs: 2000,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.l2_alpha >= 0.0 && self.l1_beta >= 0.0) {
            return bad("regularization weights must be non-negative".into());
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return bad("max_epochs and patience must be at least 1".into());
        }
        if self.patience > self.max_epochs {
            return bad(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            ));
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || self.adam_eps <= 0.0
        {
            return bad("Adam betas must lie in [0, 1) and eps must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStopping,
    MaxEpochs,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::EarlyStopping => "early_stopping",
            StopReason::MaxEpochs => "max_epochs",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean regularized batch loss over the epoch.
    pub train_loss: f64,
    /// Mean squared error on the validation samples.
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stop_reason: StopReason,
}

impl TrainLog {
    /// Writes `epoch,train_loss,val_loss` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for r in &self.epochs {
            w.serialize(r).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Mean squared error of `net` over `samples`.
pub fn mean_squared_error(net: &Network, samples: &[InputSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Data("no samples to score".into()));
    }
    let mut total = 0.0;
    for s in samples {
        total += data_loss(&net.forward(s)?, &s.target)?;
    }
    Ok(total / samples.len() as f64)
}

/// Trains with Adam on shuffled mini-batches, stops once the validation loss
/// has not improved for `patience` epochs, and returns the network with the
/// best validation weights restored.
pub fn train(
    net: Network,
    train: &[InputSample],
    val: &[InputSample],
    config: &TrainConfig,
) -> Result<(Network, TrainLog)> {
    train_with_observer(net, train, val, config, &mut |_| {})
}

/// Like [`train`], calling `observer` after every optimizer step.
pub fn train_with_observer(
    mut net: Network,
    train: &[InputSample],
    val: &[InputSample],
    config: &TrainConfig,
    observer: &mut dyn FnMut(&Network),
) -> Result<(Network, TrainLog)> {
    config.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Data(format!(
            "training needs samples in both splits (train {}, validation {})",
            train.len(),
            val.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(&net, config);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut best = net.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&InputSample> = chunk.iter().map(|&i| &train[i]).collect();
            let r = batch_gradients(&net, &batch, config)?;
            adam.step(&mut net, &r.grads)?;
            observer(&net);
            loss_sum += r.loss;
            batches += 1;
        }
        let train_loss = loss_sum / batches as f64;
        let val_loss = mean_squared_error(&net, val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "validation loss at epoch {epoch}"
            )));
        }
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best_val {
            best_val = val_loss;
            best_epoch = epoch;
            best = net.clone();
        } else if epoch - best_epoch >= config.patience {
            stop_reason = StopReason::EarlyStopping;
            break;
        }
    }
    Ok((
        best,
        TrainLog {
            epochs,
            best_epoch,
            best_val_loss: best_val,
            stop_reason,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureLayout, FeatureMask, FeatureStats, InputSample};
    use crate::focirnet::{ModelConfig, Variant};
    use crate::testutil::rand_tensor;

    fn toy(n: usize, layout: FeatureLayout, seed: u64) -> Vec<InputSample> {
        let f = layout.n_features();
        (0..n)
            .map(|i| {
                let x = rand_tensor(&[2, f], seed + i as u64);
                let target = (0..2)
                    .map(|z| 0.8 * x.at2(z, 0) - 0.3 * x.at2(z, 1) + 0.1)
                    .collect();
                InputSample {
                    x,
                    target,
                    slot_index: i + layout.lookback,
                    layout,
                }
            })
            .collect()
    }

    fn fin(layout: FeatureLayout, seed: u64) -> Network {
        let cfg = ModelConfig {
            variant: Variant::Fin,
            lookback: layout.lookback,
            dense_layers: 1,
            dense_units: 8,
            seed,
            ..Default::default()
        };
        Network::build(&cfg, 2, layout, FeatureStats::identity(layout.n_features())).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                patience: 3000,
                ..Default::default()
            },
            TrainConfig {
                l1_beta: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::Config(_))));
        }
    }

    #[test]
    fn training_is_deterministic_and_fits() {
        let layout = FeatureLayout::new(1, 1, FeatureMask::ALL).unwrap();
        let data = toy(40, layout, 1);
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 8,
            l2_alpha: 0.0,
            l1_beta: 0.0,
            patience: 300,
            max_epochs: 300,
            seed: 3,
            ..Default::default()
        };
        let start = mean_squared_error(&fin(layout, 2), &data).unwrap();
        let (a, log_a) = train(fin(layout, 2), &data, &data[..10], &cfg).unwrap();
        let (b, log_b) = train(fin(layout, 2), &data, &data[..10], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(log_a, log_b);
        let end = mean_squared_error(&a, &data).unwrap();
        assert!(end < 0.1 * start, "{start} -> {end}");
        let best = log_a.epochs[log_a.best_epoch - 1].val_loss;
        assert_eq!(best, log_a.best_val_loss);
        assert_eq!(mean_squared_error(&a, &data[..10]).unwrap(), best);
    }

    #[test]
    fn early_stopping_when_validation_never_improves() {
        let layout = FeatureLayout::new(1, 1, FeatureMask::ALL).unwrap();
        let train_set = toy(20, layout, 1);
        // validation targets unrelated to inputs and far away
        let mut val = toy(5, layout, 100);
        for s in &mut val {
            s.target = vec![1e3, -1e3];
        }
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 4,
            patience: 3,
            max_epochs: 200,
            ..Default::default()
        };
        let (_, log) = train(fin(layout, 0), &train_set, &val, &cfg).unwrap();
        assert_eq!(log.stop_reason, StopReason::EarlyStopping);
        assert_eq!(log.epochs.len(), log.best_epoch + cfg.patience);
        assert!(log.epochs.len() < cfg.max_epochs);
    }

    #[test]
    fn observer_sees_bounded_recurrent_weights() {
        let layout = FeatureLayout::new(2, 2, FeatureMask::ALL).unwrap();
        let cfg = ModelConfig {
            variant: Variant::Fir,
            lookback: 2,
            indrnn_hidden: 4,
            dense_units: 4,
            ..Default::default()
        };
        let net =
            Network::build(&cfg, 2, layout, FeatureStats::identity(layout.n_features())).unwrap();
        let data = toy(12, layout, 4);
        let tc = TrainConfig {
            learning_rate: 0.5,
            batch_size: 4,
            patience: 5,
            max_epochs: 5,
            ..Default::default()
        };
        let mut steps = 0;
        train_with_observer(net, &data, &data, &tc, &mut |n| {
            steps += 1;
            assert!(n.recurrent_within_bounds());
        })
        .unwrap();
        assert_eq!(steps, 15);
    }

    #[test]
    fn non_finite_targets_are_reported() {
        let layout = FeatureLayout::new(1, 1, FeatureMask::ALL).unwrap();
        let mut data = toy(4, layout, 1);
        data[0].target = vec![f64::INFINITY, 0.0];
        let cfg = TrainConfig {
            patience: 1,
            max_epochs: 1,
            ..Default::default()
        };
        let err = train(fin(layout, 0), &data, &data, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn patience_one_restores_first_epoch() {
        let layout = FeatureLayout::new(1, 1, FeatureMask::ALL).unwrap();
        let data = toy(8, layout, 1);
        let cfg = TrainConfig {
            learning_rate: 0.05,
            batch_size: 8,
            patience: 1,
            max_epochs: 50,
            l2_alpha: 0.0,
            l1_beta: 0.0,
            ..Default::default()
        };
        // after one epoch the validation loss is recorded; make every later
        // epoch worse by training away from an unreachable validation target
        let mut val = toy(4, layout, 50);
        for s in &mut val {
            s.target = vec![-500.0, -500.0];
        }
        let init = fin(layout, 1);
        let (net, log) = train_with_observer(init, &data, &val, &cfg, &mut |_| {}).unwrap();
        assert!(
            log.epochs[1].val_loss >= log.epochs[0].val_loss,
            "{:?}",
            log.epochs
        );
        assert_eq!(log.epochs.len(), 2);
        assert_eq!(log.best_epoch, 1);
        assert_eq!(
            mean_squared_error(&net, &val).unwrap(),
            log.epochs[0].val_loss
        );
    }

    #[test]
    fn constant_zero_targets_shrink_weights() {
        let layout = FeatureLayout::new(1, 1, FeatureMask::ALL).unwrap();
        let mut data = toy(16, layout, 2);
        for s in &mut data {
            s.x.data_mut().fill(0.0);
            s.target = vec![0.0, 0.0];
        }
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 16,
            l2_alpha: 0.01,
            patience: 200,
            max_epochs: 200,
            ..Default::default()
        };
        let start = fin(layout, 4);
        let norm = |n: &Network| n.flat_params().iter().map(|w| w * w).sum::<f64>();
        let (net, log) = train(start.clone(), &data, &data, &cfg).unwrap();
        assert!(norm(&net) < norm(&start));
        assert!(log.best_val_loss < 1e-6);
    }

    use crate::training::batch_gradients;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn one_step_descends(seed in 0u64..10_000, v in 0usize..7) {
            let variant = Variant::ALL[v];
            let layout = FeatureLayout::new(2, 2, FeatureMask::ALL).unwrap();
            let mc = ModelConfig {
                variant,
                lookback: 2,
                conv_filters: vec![2, 2],
                filter_length: 3,
                indrnn_hidden: 2,
                dense_units: 3,
                seed,
                ..Default::default()
            };
            let mut net = Network::build(&mc, 2, layout, FeatureStats::identity(layout.n_features())).unwrap();
            let s = toy(1, layout, seed).remove(0);
            let cfg = TrainConfig { learning_rate: 1e-4, l2_alpha: 0.0, l1_beta: 0.0, ..Default::default() };
            let r = batch_gradients(&net, &[&s], &cfg).unwrap();
            prop_assume!(r.grads.iter().any(|g| g.data().iter().any(|&x| x != 0.0)));
            let mut adam = Adam::new(&net, &cfg);
            adam.step(&mut net, &r.grads).unwrap();
            let after = batch_gradients(&net, &[&s], &cfg).unwrap().data_loss;
            prop_assert!(after < r.data_loss, "{} -> {}", r.data_loss, after);
        }
    }
}
