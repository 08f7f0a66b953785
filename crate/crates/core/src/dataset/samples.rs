use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::layout::{FeatureLayout, ValueKind};
use super::{repeat_across_zones, ZoneSlotFrame};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Demand,
    Gap,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetKind::Demand => "demand",
            TargetKind::Gap => "gap",
        })
    }
}

impl FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "demand" => Ok(TargetKind::Demand),
            "gap" => Ok(TargetKind::Gap),
            other => Err(Error::Config(format!(
                "unknown target `{other}` (expected demand or gap)"
            ))),
        }
    }
}

/// Feature matrix `N x F` for predicting slot `slot_index`, with the raw
/// target vector of that slot.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSample {
    pub x: Tensor,
    pub target: Vec<f64>,
    pub slot_index: usize,
    pub layout: FeatureLayout,
}

/// Per-column z-score parameters fitted on training samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub divisor: Vec<f64>,
    pub passthrough: Vec<bool>,
}

impl FeatureStats {
    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    /// Standardizes the continuous columns of `x` (`N x F`) in place.
    pub fn apply(&self, x: &mut Tensor) -> Result<()> {
        let f = self.n_features();
        if x.cols() != f {
            return Err(Error::Shape(format!(
                "standardizer has {f} columns, sample has {}",
                x.cols()
            )));
        }
        for row in x.data_mut().chunks_mut(f) {
            for (j, v) in row.iter_mut().enumerate() {
                if !self.passthrough[j] {
                    *v = (*v - self.mean[j]) / self.divisor[j];
                }
            }
        }
        Ok(())
    }

    /// Identity transform, for callers that skip standardization.
    pub fn identity(n_features: usize) -> Self {
        FeatureStats {
            mean: vec![0.0; n_features],
            divisor: vec![1.0; n_features],
            passthrough: vec![true; n_features],
        }
    }
}

/// Assembles one sample per slot `t` in `[b, T)`.
pub fn build_samples(
    frame: &ZoneSlotFrame,
    layout: &FeatureLayout,
    target: TargetKind,
    standardizer: Option<&FeatureStats>,
) -> Result<Vec<InputSample>> {
    let t_total = frame.total_slots();
    let b = layout.lookback;
    if b == 0 || b >= t_total {
        return Err(Error::Config(format!(
            "lookback {b} needs fewer than {t_total} slots"
        )));
    }
    if layout.n_weather != frame.n_weather_categories {
        return Err(Error::Layout(format!(
            "layout expects {} weather categories, frame has {}",
            layout.n_weather, frame.n_weather_categories
        )));
    }
    if let Some(s) = standardizer {
        if s.n_features() != layout.n_features() {
            return Err(Error::Layout(format!(
                "standardizer has {} columns, layout {}",
                s.n_features(),
                layout.n_features()
            )));
        }
    }
    (b..t_total)
        .map(|t| {
            let mut x = assemble(frame, layout, t)?;
            if let Some(s) = standardizer {
                s.apply(&mut x)?;
            }
            Ok(InputSample {
                x,
                target: frame.target(target).data()[..]
                    .chunks(t_total)
                    .map(|row| row[t])
                    .collect(),
                slot_index: t,
                layout: *layout,
            })
        })
        .collect()
}

/// The sample predicting slot `t`, for `b <= t <= T`. At `t = T` (the slot
/// after the data ends) the target is empty.
pub fn build_sample_at(
    frame: &ZoneSlotFrame,
    layout: &FeatureLayout,
    t: usize,
    target: TargetKind,
    standardizer: Option<&FeatureStats>,
) -> Result<InputSample> {
    let t_total = frame.total_slots();
    if t < layout.lookback || t > t_total {
        return Err(Error::Data(format!(
            "slot {t} needs {} earlier slots and must not exceed {t_total}",
            layout.lookback
        )));
    }
    if layout.n_weather != frame.n_weather_categories {
        return Err(Error::Layout(format!(
            "layout expects {} weather categories, frame has {}",
            layout.n_weather, frame.n_weather_categories
        )));
    }
    let mut x = assemble(frame, layout, t)?;
    if let Some(s) = standardizer {
        s.apply(&mut x)?;
    }
    let series = frame.target(target);
    let target = if t < t_total {
        (0..frame.num_zones()).map(|p| series.at2(p, t)).collect()
    } else {
        Vec::new()
    };
    Ok(InputSample {
        x,
        target,
        slot_index: t,
        layout: *layout,
    })
}

/// Raw feature matrix for slot `t`. Requires `t >= b`.
pub(crate) fn assemble(frame: &ZoneSlotFrame, layout: &FeatureLayout, t: usize) -> Result<Tensor> {
    let n = frame.num_zones();
    let b = layout.lookback;
    debug_assert!(t >= b && t <= frame.total_slots());
    let f = layout.n_features();
    let mut x = Tensor::zeros(&[n, f]);

    if layout.mask.spatio_temporal {
        let vars = [
            &frame.demand,
            &frame.supplied,
            &frame.gap,
            &frame.congestion,
        ];
        for p in 0..n {
            let row = x.row_mut(p);
            for (v, m) in vars.iter().enumerate() {
                for lag in 1..=b {
                    row[layout.spatio_temporal_col(v, lag)] = m.at2(p, t - lag);
                }
            }
        }
    }

    if layout.mask.temporal {
        let mut lagged = Vec::with_capacity(layout.temporal_width());
        for lag in 1..=b {
            lagged.extend(frame.weather_one_hot(t - lag));
            lagged.push(frame.temperature[t - lag]);
            lagged.push(frame.pm25[t - lag]);
        }
        let repeated = repeat_across_zones(&lagged, n)?;
        let range = layout.temporal_range();
        for p in 0..n {
            x.row_mut(p)[range.clone()].copy_from_slice(repeated.row(p));
        }
    }

    if layout.mask.context {
        let mut shared = frame.time_of_day_one_hot(t).to_vec();
        shared.push(frame.day_of_week(t));
        let repeated = repeat_across_zones(&shared, n)?;
        let start = layout.context_range().start;
        for p in 0..n {
            let row = x.row_mut(p);
            row[start..start + 4].copy_from_slice(repeated.row(p));
            row[start + 4] = frame.poi[p];
        }
    }
    Ok(x)
}

/// Per-column mean and population standard deviation over every zone and
/// training slot. One-hot and binary columns pass through; zero-variance
/// columns get divisor 1.
pub fn fit_feature_stats(train: &[InputSample]) -> Result<FeatureStats> {
    let first = train
        .first()
        .ok_or_else(|| Error::Data("cannot fit feature statistics on no samples".into()))?;
    let layout = first.layout;
    let f = layout.n_features();
    let kinds = layout.value_kinds();
    let mut sum = vec![0.0; f];
    let mut count = 0usize;
    for s in train {
        s.layout.check_compatible(&layout)?;
        for row in s.x.data().chunks(f) {
            for (acc, v) in sum.iter_mut().zip(row) {
                *acc += v;
            }
            count += 1;
        }
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; f];
    for s in train {
        for row in s.x.data().chunks(f) {
            for j in 0..f {
                let d = row[j] - mean[j];
                sq[j] += d * d;
            }
        }
    }
    let passthrough: Vec<bool> = kinds.iter().map(|k| *k == ValueKind::PassThrough).collect();
    let divisor = sq
        .iter()
        .zip(&passthrough)
        .map(|(s, &p)| {
            let sd = (s / count as f64).sqrt();
            if !p && sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    let mean = mean
        .into_iter()
        .zip(&passthrough)
        .map(|(m, &p)| if p { 0.0 } else { m })
        .collect();
    Ok(FeatureStats {
        mean,
        divisor,
        passthrough,
    })
}

/// Contiguous chronological split. Boundaries are `floor(n * train_frac)` and
/// `floor(n * (train_frac + val_frac))`; the remainder is the test set.
pub fn split_chronological<T: Clone>(
    samples: &[T],
    train_frac: f64,
    val_frac: f64,
) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    if !(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0) {
        return Err(Error::Config(format!(
            "split fractions {train_frac}/{val_frac} must be positive and sum below 1"
        )));
    }
    let (a, b) = split_points(samples.len(), train_frac, val_frac);
    if a == 0 || b == a || b == samples.len() {
        return Err(Error::Data(format!(
            "split of {} samples leaves an empty partition",
            samples.len()
        )));
    }
    Ok((
        samples[..a].to_vec(),
        samples[a..b].to_vec(),
        samples[b..].to_vec(),
    ))
}

/// The two cumulative split boundaries for `n` items.
pub(crate) fn split_points(n: usize, train_frac: f64, val_frac: f64) -> (usize, usize) {
    // The epsilon absorbs representation error such as 0.7 * 10 = 6.9999...
    let floor = |x: f64| ((x + 1e-9).floor() as usize).min(n);
    let a = floor(n as f64 * train_frac);
    let b = floor(n as f64 * (train_frac + val_frac)).max(a);
    (a, b)
}
