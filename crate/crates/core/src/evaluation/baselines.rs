use crate::dataset::{InputSample, TargetKind, ZoneSlotFrame};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::Forecaster;

/// Predicts each zone's value at `t - 1`.
#[derive(Debug, Clone)]
pub struct Persistence {
    series: Tensor,
}

impl Persistence {
    pub fn new(frame: &ZoneSlotFrame, target: TargetKind) -> Self {
        Persistence {
            series: frame.target(target).clone(),
        }
    }

    pub fn predict_slot(&self, slot: usize) -> Result<Vec<f64>> {
        if slot == 0 || slot > self.series.cols() {
            return Err(Error::Data(format!(
                "persistence has no slot before {slot}"
            )));
        }
        Ok((0..self.series.rows())
            .map(|p| self.series.at2(p, slot - 1))
            .collect())
    }
}

impl Forecaster for Persistence {
    fn name(&self) -> String {
        "persistence".into()
    }

    fn predict(&self, sample: &InputSample) -> Result<Vec<f64>> {
        self.predict_slot(sample.slot_index)
    }
}

/// Per-zone predictions `A_{t-1}` for every slot `t` in `[lookback, T)`.
pub fn persistence_baseline(
    frame: &ZoneSlotFrame,
    target: TargetKind,
    lookback: usize,
) -> Result<Vec<Vec<f64>>> {
    let p = Persistence::new(frame, target);
    (lookback.max(1)..frame.total_slots())
        .map(|t| p.predict_slot(t))
        .collect()
}

/// Predicts the training-period mean of each (zone, slot-of-day) pair. Pairs
/// never seen in training fall back to the zone's overall training mean.
#[derive(Debug, Clone)]
pub struct HistoricalAverage {
    table: Tensor,
    slots_per_day: usize,
}

impl HistoricalAverage {
    pub fn fit(frame: &ZoneSlotFrame, target: TargetKind, train_slots: &[usize]) -> Result<Self> {
        if train_slots.is_empty() {
            return Err(Error::Data(
                "historical average needs training slots".into(),
            ));
        }
        let series = frame.target(target);
        let n = frame.num_zones();
        let spd = frame.grid.slots_per_day();
        let mut sum = Tensor::zeros(&[n, spd]);
        let mut count = vec![0usize; spd];
        let mut zone_sum = vec![0.0; n];
        for &t in train_slots {
            if t >= frame.total_slots() {
                return Err(Error::Data(format!("training slot {t} outside the frame")));
            }
            let k = frame.grid.slot_of_day(t);
            count[k] += 1;
            for (p, zs) in zone_sum.iter_mut().enumerate() {
                let v = series.at2(p, t);
                sum.set2(p, k, sum.at2(p, k) + v);
                *zs += v;
            }
        }
        let mut table = Tensor::zeros(&[n, spd]);
        for p in 0..n {
            let fallback = zone_sum[p] / train_slots.len() as f64;
            for (k, &c) in count.iter().enumerate() {
                let v = if c > 0 {
                    sum.at2(p, k) / c as f64
                } else {
                    fallback
                };
                table.set2(p, k, v);
            }
        }
        Ok(HistoricalAverage {
            table,
            slots_per_day: spd,
        })
    }

    pub fn predict_slot(&self, slot: usize) -> Vec<f64> {
        let k = slot % self.slots_per_day;
        (0..self.table.rows())
            .map(|p| self.table.at2(p, k))
            .collect()
    }
}

impl Forecaster for HistoricalAverage {
    fn name(&self) -> String {
        "historical_average".into()
    }

    fn predict(&self, sample: &InputSample) -> Result<Vec<f64>> {
        Ok(self.predict_slot(sample.slot_index))
    }
}

/// Historical average fitted on `train_slots`.
pub fn historical_average_baseline(
    frame: &ZoneSlotFrame,
    target: TargetKind,
    train_slots: &[usize],
) -> Result<HistoricalAverage> {
    HistoricalAverage::fit(frame, target, train_slots)
}
