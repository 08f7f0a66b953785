use std::fmt;

use serde::Serialize;

use super::{evaluate, prepare, train_prepared, MetricsReport};
use crate::dataset::{FeatureLayout, FeatureMask, ZoneSlotFrame};
use crate::error::Result;
use crate::focirnet::{DataSpec, ModelConfig, Variant};
use crate::training::TrainConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AblationMode {
    Model,
    Feature,
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AblationMode::Model => "model",
            AblationMode::Feature => "feature",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub label: String,
    pub seed: u64,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationMatrix {
    pub mode: AblationMode,
    pub rows: Vec<AblationRow>,
}

impl AblationMatrix {
    pub fn reports(&self) -> Vec<MetricsReport> {
        self.rows.iter().map(|r| r.report.clone()).collect()
    }
}

/// Trains and tests the full network and every ablation variant on one
/// shared split. Row `i` uses model seed `model.seed + i` and shuffle seed
/// `train.seed + i`.
pub fn run_model_ablation(
    frame: &ZoneSlotFrame,
    model: &ModelConfig,
    train: &TrainConfig,
    spec: &DataSpec,
) -> Result<AblationMatrix> {
    let layout = FeatureLayout::new(model.lookback, frame.n_weather_categories, FeatureMask::ALL)?;
    let data = prepare(frame, layout, model.target, spec)?;
    let mut rows = Vec::with_capacity(Variant::ALL.len());
    for (i, variant) in Variant::ALL.into_iter().enumerate() {
        let (m, t) = seeded(model, train, i);
        let m = ModelConfig { variant, ..m };
        let (net, _) = train_prepared(&data, frame.num_zones(), &m, &t)?;
        let mut report = evaluate(&net, &data.test, model.target)?;
        report.model = variant.display_name().to_string();
        rows.push(AblationRow {
            label: report.model.clone(),
            seed: m.seed,
            report,
        });
    }
    Ok(AblationMatrix {
        mode: AblationMode::Model,
        rows,
    })
}

/// Trains and tests the configured variant under each of the six feature
/// combinations.
pub fn run_feature_ablation(
    frame: &ZoneSlotFrame,
    model: &ModelConfig,
    train: &TrainConfig,
    spec: &DataSpec,
) -> Result<AblationMatrix> {
    run_feature_ablation_with(frame, model, train, spec, &FeatureMask::ABLATIONS)
}

/// Like [`run_feature_ablation`] over an explicit list of masks.
pub fn run_feature_ablation_with(
    frame: &ZoneSlotFrame,
    model: &ModelConfig,
    train: &TrainConfig,
    spec: &DataSpec,
    masks: &[FeatureMask],
) -> Result<AblationMatrix> {
    let mut rows = Vec::with_capacity(masks.len());
    for (i, &mask) in masks.iter().enumerate() {
        let (m, t) = seeded(model, train, i);
        let layout = FeatureLayout::new(m.lookback, frame.n_weather_categories, mask)?;
        let data = prepare(frame, layout, m.target, spec)?;
        let (net, _) = train_prepared(&data, frame.num_zones(), &m, &t)?;
        let mut report = evaluate(&net, &data.test, m.target)?;
        report.model = mask.label();
        rows.push(AblationRow {
            label: mask.label(),
            seed: m.seed,
            report,
        });
    }
    Ok(AblationMatrix {
        mode: AblationMode::Feature,
        rows,
    })
}

fn seeded(model: &ModelConfig, train: &TrainConfig, i: usize) -> (ModelConfig, TrainConfig) {
    let i = i as u64;
    (
        ModelConfig {
            seed: model.seed.wrapping_add(i),
            ..model.clone()
        },
        TrainConfig {
            seed: train.seed.wrapping_add(i),
            ..train.clone()
        },
    )
}
