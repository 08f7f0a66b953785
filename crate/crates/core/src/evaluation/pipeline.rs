use crate::dataset::{
    build_samples, fit_feature_stats, split_chronological, FeatureLayout, FeatureStats,
    InputSample, TargetKind, ZoneSlotFrame,
};
use crate::error::Result;
use crate::focirnet::{DataSpec, ModelConfig, Network};
use crate::training::{train, TrainConfig, TrainLog};

use super::MetricsReport;

/// Anything that maps an input sample to per-zone predictions on the raw
/// target scale.
pub trait Forecaster {
    fn name(&self) -> String;
    fn predict(&self, sample: &InputSample) -> Result<Vec<f64>>;
}

impl Forecaster for Network {
    fn name(&self) -> String {
        self.config.variant.display_name().to_string()
    }

    fn predict(&self, sample: &InputSample) -> Result<Vec<f64>> {
        self.forward(sample)
    }
}

/// Metrics of `model` over `samples`.
pub fn evaluate(
    model: &dyn Forecaster,
    samples: &[InputSample],
    target: TargetKind,
) -> Result<MetricsReport> {
    let mut preds = Vec::with_capacity(samples.len());
    let mut targets = Vec::with_capacity(samples.len());
    for s in samples {
        preds.push(model.predict(s)?);
        targets.push(s.target.clone());
    }
    MetricsReport::compute(&model.name(), target, &preds, &targets)
}

/// Chronologically split samples, standardized with statistics fitted on the
/// training split only.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub layout: FeatureLayout,
    pub target: TargetKind,
    pub stats: FeatureStats,
    pub train: Vec<InputSample>,
    pub val: Vec<InputSample>,
    pub test: Vec<InputSample>,
}

impl PreparedData {
    pub fn train_slots(&self) -> Vec<usize> {
        self.train.iter().map(|s| s.slot_index).collect()
    }
}

pub fn prepare(
    frame: &ZoneSlotFrame,
    layout: FeatureLayout,
    target: TargetKind,
    spec: &DataSpec,
) -> Result<PreparedData> {
    prepare_inner(frame, layout, target, spec, None)
}

/// Like [`prepare`] with statistics fixed in advance, such as those stored
/// with a trained network.
pub fn prepare_with_stats(
    frame: &ZoneSlotFrame,
    layout: FeatureLayout,
    target: TargetKind,
    spec: &DataSpec,
    stats: &FeatureStats,
) -> Result<PreparedData> {
    prepare_inner(frame, layout, target, spec, Some(stats))
}

fn prepare_inner(
    frame: &ZoneSlotFrame,
    layout: FeatureLayout,
    target: TargetKind,
    spec: &DataSpec,
    stats: Option<&FeatureStats>,
) -> Result<PreparedData> {
    frame.validate()?;
    let raw = build_samples(frame, &layout, target, None)?;
    let (mut train, mut val, mut test) = split_chronological(&raw, spec.train_frac, spec.val_frac)?;
    let stats = match stats {
        Some(s) => s.clone(),
        None => fit_feature_stats(&train)?,
    };
    for s in train.iter_mut().chain(&mut val).chain(&mut test) {
        stats.apply(&mut s.x)?;
    }
    Ok(PreparedData {
        layout,
        target,
        stats,
        train,
        val,
        test,
    })
}

/// Builds a network for `data` and trains it.
pub fn train_prepared(
    data: &PreparedData,
    n_zones: usize,
    model: &ModelConfig,
    config: &TrainConfig,
) -> Result<(Network, TrainLog)> {
    let net = Network::build(model, n_zones, data.layout, data.stats.clone())?;
    train(net, &data.train, &data.val, config)
}
