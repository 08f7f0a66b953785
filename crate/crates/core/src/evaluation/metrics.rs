use serde::Serialize;

use crate::dataset::TargetKind;
use crate::error::{Error, Result};

fn check(preds: &[f64], targets: &[f64]) -> Result<()> {
    if preds.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Data("metrics need at least one cell".into()));
    }
    Ok(())
}

/// Mean absolute error over all cells.
pub fn mae(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds, targets)?;
    let s: f64 = preds.iter().zip(targets).map(|(o, a)| (o - a).abs()).sum();
    Ok(s / preds.len() as f64)
}

/// Root mean squared error over all cells.
pub fn rmse(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds, targets)?;
    let s: f64 = preds
        .iter()
        .zip(targets)
        .map(|(o, a)| (o - a) * (o - a))
        .sum();
    Ok((s / preds.len() as f64).sqrt())
}

/// Mean of `|O - A| / (|O| + |A| + 1)` over all cells.
pub fn smape(preds: &[f64], targets: &[f64]) -> Result<f64> {
    check(preds, targets)?;
    let s: f64 = preds
        .iter()
        .zip(targets)
        .map(|(o, a)| (o - a).abs() / (o.abs() + a.abs() + 1.0))
        .sum();
    Ok(s / preds.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub model: String,
    pub target: TargetKind,
    pub mae: f64,
    pub rmse: f64,
    pub smape: f64,
    pub n_slots: usize,
    pub n_zones: usize,
}

impl MetricsReport {
    /// Metrics over `preds` and `targets`, one vector of zone values per slot.
    pub fn compute(
        model: &str,
        target: TargetKind,
        preds: &[Vec<f64>],
        targets: &[Vec<f64>],
    ) -> Result<Self> {
        if preds.len() != targets.len() {
            return Err(Error::Shape(format!(
                "{} predicted slots for {} target slots",
                preds.len(),
                targets.len()
            )));
        }
        let n_zones = targets.first().map_or(0, Vec::len);
        if preds.iter().chain(targets).any(|v| v.len() != n_zones) {
            return Err(Error::Shape("every slot needs one value per zone".into()));
        }
        let o: Vec<f64> = preds.concat();
        let a: Vec<f64> = targets.concat();
        Ok(MetricsReport {
            model: model.to_string(),
            target,
            mae: mae(&o, &a)?,
            rmse: rmse(&o, &a)?,
            smape: smape(&o, &a)?,
            n_slots: preds.len(),
            n_zones,
        })
    }
}
