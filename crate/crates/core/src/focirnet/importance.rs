use super::Network;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Importance scores of a trained gate, raw and averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceReport {
    pub feature_names: Vec<String>,
    /// `N x F` activated gate weights.
    pub raw_scores: Tensor,
    /// Per feature, mean over zones, normalized to sum 1.
    pub spatial_avg: Vec<f64>,
    pub group_names: Vec<String>,
    /// `N x G`: per zone, the mean over each group's columns, normalized per
    /// zone to sum 1.
    pub temporal_avg: Tensor,
    /// `(feature, spatial_avg)` sorted by score, highest first.
    pub ranking: Vec<(String, f64)>,
}

impl ImportanceReport {
    /// Per group, the mean of its columns' zone-averaged scores, normalized to
    /// sum 1.
    pub fn group_spatial_avg(
        &self,
        net_groups: &[crate::dataset::FeatureGroup],
    ) -> Vec<(String, f64)> {
        let n = self.raw_scores.rows();
        let f = self.raw_scores.cols();
        let col_mean: Vec<f64> = (0..f)
            .map(|j| (0..n).map(|p| self.raw_scores.at2(p, j)).sum::<f64>() / n as f64)
            .collect();
        let means: Vec<f64> = net_groups
            .iter()
            .map(|g| g.columns.iter().map(|&c| col_mean[c]).sum::<f64>() / g.columns.len() as f64)
            .collect();
        let total: f64 = means.iter().sum();
        net_groups
            .iter()
            .zip(means)
            .map(|(g, m)| (g.name.clone(), normalize(m, total)))
            .collect()
    }
}

fn normalize(v: f64, total: f64) -> f64 {
    if total > 0.0 {
        v / total
    } else {
        0.0
    }
}

pub fn extract_importance(net: &Network) -> Result<ImportanceReport> {
    let fi = net.importance.as_ref().ok_or_else(|| {
        Error::Unsupported(format!(
            "{} has no feature importance layer",
            net.config.variant
        ))
    })?;
    let raw = fi.scores();
    let (n, f) = (raw.rows(), raw.cols());
    let feature_names = net.layout.column_names();

    let col_mean: Vec<f64> = (0..f)
        .map(|j| (0..n).map(|p| raw.at2(p, j)).sum::<f64>() / n as f64)
        .collect();
    let total: f64 = col_mean.iter().sum();
    let spatial_avg: Vec<f64> = col_mean.iter().map(|&m| normalize(m, total)).collect();

    let groups = net.layout.groups();
    let mut temporal_avg = Tensor::zeros(&[n, groups.len()]);
    for p in 0..n {
        let row = raw.row(p);
        let means: Vec<f64> = groups
            .iter()
            .map(|g| g.columns.iter().map(|&c| row[c]).sum::<f64>() / g.columns.len() as f64)
            .collect();
        let total: f64 = means.iter().sum();
        for (dst, m) in temporal_avg.row_mut(p).iter_mut().zip(means) {
            *dst = normalize(m, total);
        }
    }

    let mut ranking: Vec<(String, f64)> = feature_names
        .iter()
        .cloned()
        .zip(spatial_avg.iter().copied())
        .collect();
    // stable: ties keep column order
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1));

    Ok(ImportanceReport {
        feature_names,
        raw_scores: raw,
        spatial_avg,
        group_names: groups.into_iter().map(|g| g.name).collect(),
        temporal_avg,
        ranking,
    })
}
