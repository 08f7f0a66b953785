use std::path::Path;

use serde::Serialize;

use super::MetricsReport;
use crate::dataset::TargetKind;
use crate::error::{Error, Result};
use crate::focirnet::ImportanceReport;

#[derive(Serialize)]
struct MetricsRow<'a> {
    model: &'a str,
    target: TargetKind,
    mae: f64,
    rmse: f64,
    smape: f64,
}

/// Writes `model,target,mae,rmse,smape`, one row per report.
pub fn write_metrics_csv(path: &Path, reports: &[MetricsReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for r in reports {
        w.serialize(MetricsRow {
            model: &r.model,
            target: r.target,
            mae: r.mae,
            rmse: r.rmse,
            smape: r.smape,
        })
        .map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes the spatial-average ranking as `feature,score` and the per-zone
/// group scores as `zone,group,score`.
pub fn write_importance_csv(
    report: &ImportanceReport,
    spatial: &Path,
    temporal: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(spatial).map_err(|e| Error::csv(spatial, e))?;
    w.write_record(["feature", "score"])
        .map_err(|e| Error::csv(spatial, e))?;
    for (name, score) in &report.ranking {
        w.write_record([name.as_str(), &score.to_string()])
            .map_err(|e| Error::csv(spatial, e))?;
    }
    w.flush().map_err(|e| Error::io(spatial, e))?;

    let mut w = csv::Writer::from_path(temporal).map_err(|e| Error::csv(temporal, e))?;
    w.write_record(["zone", "group", "score"])
        .map_err(|e| Error::csv(temporal, e))?;
    for p in 0..report.temporal_avg.rows() {
        for (g, name) in report.group_names.iter().enumerate() {
            w.write_record([
                p.to_string(),
                name.clone(),
                report.temporal_avg.at2(p, g).to_string(),
            ])
            .map_err(|e| Error::csv(temporal, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(temporal, e))
}
