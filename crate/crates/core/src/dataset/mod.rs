//! Space-time aggregation of raw ride-hailing records and lookback sample
//! assembly.

mod io;
mod layout;
mod samples;

pub use io::{load_tables, write_tables, CongestionRecord, PoiRecord, RawTables, WeatherRecord};
pub use layout::{FeatureGroup, FeatureLayout, FeatureMask, ValueKind, LAYOUT_VERSION};
pub use samples::{
    build_sample_at, build_samples, fit_feature_stats, split_chronological, FeatureStats,
    InputSample, TargetKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

const MINUTES_PER_DAY: usize = 1440;

/// Uniform partition of the study area into zones and of the horizon into
/// equal-length slots. Day 0 starts at local midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceTimeGrid {
    pub num_zones: usize,
    pub slot_minutes: usize,
    pub num_days: usize,
    /// Weekday of day 0, 0 = Monday ... 6 = Sunday.
    pub start_weekday: usize,
}

impl SpaceTimeGrid {
    pub fn new(num_zones: usize, slot_minutes: usize, num_days: usize) -> Result<Self> {
        let grid = SpaceTimeGrid {
            num_zones,
            slot_minutes,
            num_days,
            start_weekday: 0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_start_weekday(mut self, weekday: usize) -> Result<Self> {
        self.start_weekday = weekday;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_zones == 0 {
            return Err(Error::Config("grid needs at least one zone".into()));
        }
        if self.slot_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(self.slot_minutes) {
            return Err(Error::Config(format!(
                "slot length {} min does not divide a day",
                self.slot_minutes
            )));
        }
        if self.num_days == 0 {
            return Err(Error::Config("grid needs at least one day".into()));
        }
        if self.start_weekday > 6 {
            return Err(Error::Config("start_weekday must be in 0..=6".into()));
        }
        Ok(())
    }

    pub fn slots_per_day(&self) -> usize {
        MINUTES_PER_DAY / self.slot_minutes
    }

    pub fn total_slots(&self) -> usize {
        self.slots_per_day() * self.num_days
    }

    pub fn slot_of_day(&self, slot: usize) -> usize {
        slot % self.slots_per_day()
    }

    /// 0 = sleep (first 8 h), 1 = peak (middle 8 h), 2 = off-peak (last 8 h).
    pub fn time_of_day(&self, slot: usize) -> usize {
        let minute = self.slot_of_day(slot) * self.slot_minutes;
        minute / 480
    }

    pub fn is_weekend(&self, slot: usize) -> bool {
        let day = slot / self.slots_per_day();
        (self.start_weekday + day) % 7 >= 5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderRecord {
    pub zone_id: usize,
    pub slot_index: usize,
    /// `false` for requests no driver answered.
    pub matched: bool,
}

/// Demand, supplied quantity and gap, each `N x T`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderCounts {
    pub demand: Tensor,
    pub supplied: Tensor,
    pub gap: Tensor,
}

pub fn aggregate_orders(records: &[OrderRecord], grid: &SpaceTimeGrid) -> Result<OrderCounts> {
    let (n, t) = (grid.num_zones, grid.total_slots());
    let mut demand = Tensor::zeros(&[n, t]);
    let mut gap = Tensor::zeros(&[n, t]);
    for (i, r) in records.iter().enumerate() {
        if r.zone_id >= n {
            return Err(Error::InvalidRecord {
                index: i,
                reason: format!("zone_id {} outside 0..{}", r.zone_id, n),
            });
        }
        if r.slot_index >= t {
            return Err(Error::InvalidRecord {
                index: i,
                reason: format!("slot_index {} outside 0..{}", r.slot_index, t),
            });
        }
        let k = r.zone_id * t + r.slot_index;
        demand.data_mut()[k] += 1.0;
        if !r.matched {
            gap.data_mut()[k] += 1.0;
        }
    }
    let mut supplied = demand.clone();
    for (s, g) in supplied.data_mut().iter_mut().zip(gap.data()) {
        *s -= g;
    }
    Ok(OrderCounts {
        demand,
        supplied,
        gap,
    })
}

/// Copies a `1 x M` row onto every one of `n_zones` rows.
pub fn repeat_across_zones(row: &[f64], n_zones: usize) -> Result<Tensor> {
    if n_zones == 0 {
        return Err(Error::Shape(
            "repeat_across_zones needs n_zones >= 1".into(),
        ));
    }
    let data = std::iter::repeat_n(row, n_zones)
        .flatten()
        .copied()
        .collect();
    Tensor::from_vec(&[n_zones, row.len()], data)
}

/// Copies a per-zone column onto every slot, giving an `N x 1 x T` tensor.
pub fn repeat_across_time(col: &[f64], n_slots: usize) -> Result<Tensor> {
    if n_slots == 0 {
        return Err(Error::Shape("repeat_across_time needs n_slots >= 1".into()));
    }
    let data = col
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, n_slots))
        .collect();
    Tensor::from_vec(&[col.len(), 1, n_slots], data)
}

/// Every variable of the problem aggregated on the space-time grid.
///
/// Zone-indexed matrices are `N x T`, row per zone. Weather series are per
/// slot; POI counts per zone. Time-of-day and day-of-week are derived from the
/// grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneSlotFrame {
    pub grid: SpaceTimeGrid,
    pub demand: Tensor,
    pub supplied: Tensor,
    pub gap: Tensor,
    pub congestion: Tensor,
    pub n_weather_categories: usize,
    pub weather_category: Vec<usize>,
    pub temperature: Vec<f64>,
    pub pm25: Vec<f64>,
    pub poi: Vec<f64>,
}

impl ZoneSlotFrame {
    pub fn num_zones(&self) -> usize {
        self.grid.num_zones
    }

    pub fn total_slots(&self) -> usize {
        self.grid.total_slots()
    }

    pub fn time_of_day_one_hot(&self, slot: usize) -> [f64; 3] {
        let mut v = [0.0; 3];
        v[self.grid.time_of_day(slot)] = 1.0;
        v
    }

    pub fn day_of_week(&self, slot: usize) -> f64 {
        if self.grid.is_weekend(slot) {
            1.0
        } else {
            0.0
        }
    }

    pub fn weather_one_hot(&self, slot: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.n_weather_categories];
        v[self.weather_category[slot]] = 1.0;
        v
    }

    pub fn target(&self, kind: TargetKind) -> &Tensor {
        match kind {
            TargetKind::Demand => &self.demand,
            TargetKind::Gap => &self.gap,
        }
    }

    pub fn total_orders(&self) -> f64 {
        self.demand.sum()
    }

    pub fn gap_fraction(&self) -> f64 {
        let d = self.demand.sum();
        if d > 0.0 {
            self.gap.sum() / d
        } else {
            0.0
        }
    }

    /// Checks shapes and the count invariants `0 <= G <= D`, `S = D - G`,
    /// `TC >= 0`.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let (n, t) = (self.num_zones(), self.total_slots());
        for (m, name) in [
            (&self.demand, "demand"),
            (&self.supplied, "supplied"),
            (&self.gap, "gap"),
            (&self.congestion, "congestion"),
        ] {
            m.expect_shape(&[n, t], name)?;
            m.check_finite(name)?;
        }
        for (len, name) in [
            (self.weather_category.len(), "weather_category"),
            (self.temperature.len(), "temperature"),
            (self.pm25.len(), "pm25"),
        ] {
            if len != t {
                return Err(Error::Shape(format!(
                    "{name}: expected {t} slots, got {len}"
                )));
            }
        }
        if self.poi.len() != n {
            return Err(Error::Shape(format!(
                "poi: expected {n} zones, got {}",
                self.poi.len()
            )));
        }
        if self.n_weather_categories == 0 {
            return Err(Error::Data("need at least one weather category".into()));
        }
        if let Some(c) = self
            .weather_category
            .iter()
            .find(|&&c| c >= self.n_weather_categories)
        {
            return Err(Error::Data(format!(
                "weather category {c} outside 0..{}",
                self.n_weather_categories
            )));
        }
        for i in 0..n * t {
            let (d, s, g) = (
                self.demand.data()[i],
                self.supplied.data()[i],
                self.gap.data()[i],
            );
            if g < 0.0 || g > d || s != d - g {
                return Err(Error::Data(format!(
                    "zone {} slot {}: inconsistent counts D={d} S={s} G={g}",
                    i / t,
                    i % t
                )));
            }
            if self.congestion.data()[i] < 0.0 {
                return Err(Error::Data(format!(
                    "zone {} slot {}: negative congestion",
                    i / t,
                    i % t
                )));
            }
        }
        if self.poi.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::Data("POI counts must be non-negative".into()));
        }
        if self
            .temperature
            .iter()
            .chain(&self.pm25)
            .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("weather series".into()));
        }
        Ok(())
    }

    /// Assembles a frame from raw tables: orders are counted, the four
    /// congestion levels summed, weather gaps forward-filled.
    pub fn from_tables(
        tables: &RawTables,
        grid: SpaceTimeGrid,
        n_weather_categories: Option<usize>,
    ) -> Result<Self> {
        grid.validate()?;
        let counts = aggregate_orders(&tables.orders, &grid)?;
        let (n, t) = (grid.num_zones, grid.total_slots());

        let mut congestion = Tensor::zeros(&[n, t]);
        for (i, r) in tables.congestion.iter().enumerate() {
            if r.zone_id >= n || r.slot_index >= t {
                return Err(Error::InvalidRecord {
                    index: i,
                    reason: format!(
                        "congestion zone/slot ({}, {}) outside {n} x {t}",
                        r.zone_id, r.slot_index
                    ),
                });
            }
            congestion.data_mut()[r.zone_id * t + r.slot_index] +=
                r.levels.iter().map(|&l| l as f64).sum::<f64>();
        }

        let (weather_category, temperature, pm25) = fill_weather(&tables.weather, t)?;
        let observed = weather_category.iter().max().map_or(1, |m| m + 1);
        let n_weather_categories = match n_weather_categories {
            Some(c) if c < observed => {
                return Err(Error::Data(format!(
                    "weather category {} exceeds configured count {c}",
                    observed - 1
                )))
            }
            Some(c) => c,
            None => observed,
        };

        let mut poi = vec![0.0; n];
        for (i, r) in tables.poi.iter().enumerate() {
            if r.zone_id >= n {
                return Err(Error::InvalidRecord {
                    index: i,
                    reason: format!("POI zone_id {} outside 0..{n}", r.zone_id),
                });
            }
            poi[r.zone_id] += r.poi_count as f64;
        }

        let frame = ZoneSlotFrame {
            grid,
            demand: counts.demand,
            supplied: counts.supplied,
            gap: counts.gap,
            congestion,
            n_weather_categories,
            weather_category,
            temperature,
            pm25,
            poi,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// Inverse of [`ZoneSlotFrame::from_tables`]. Congestion is spread over
    /// the four levels so that their sum reproduces the frame value.
    pub fn to_tables(&self) -> RawTables {
        let (n, t) = (self.num_zones(), self.total_slots());
        let mut orders = Vec::with_capacity(self.total_orders() as usize);
        let mut congestion = Vec::with_capacity(n * t);
        for slot in 0..t {
            for zone in 0..n {
                let s = self.supplied.at2(zone, slot) as usize;
                let g = self.gap.at2(zone, slot) as usize;
                let rec = |matched| OrderRecord {
                    zone_id: zone,
                    slot_index: slot,
                    matched,
                };
                orders.extend(std::iter::repeat_n(rec(true), s));
                orders.extend(std::iter::repeat_n(rec(false), g));

                let tc = self.congestion.at2(zone, slot) as u64;
                let (q, r) = (tc / 4, tc % 4);
                let mut levels = [q; 4];
                levels.iter_mut().take(r as usize).for_each(|l| *l += 1);
                congestion.push(CongestionRecord {
                    zone_id: zone,
                    slot_index: slot,
                    levels,
                });
            }
        }
        let weather = (0..t)
            .map(|slot| WeatherRecord {
                slot_index: slot,
                weather_category: self.weather_category[slot],
                temperature: self.temperature[slot],
                pm25: self.pm25[slot],
            })
            .collect();
        let poi = self
            .poi
            .iter()
            .enumerate()
            .map(|(zone_id, &c)| PoiRecord {
                zone_id,
                poi_count: c as u64,
            })
            .collect();
        RawTables {
            orders,
            congestion,
            weather,
            poi,
        }
    }
}

/// Forward-fills missing weather slots; slots before the first observation
/// take the first observed value.
fn fill_weather(
    records: &[WeatherRecord],
    total_slots: usize,
) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let mut by_slot: Vec<Option<&WeatherRecord>> = vec![None; total_slots];
    for (i, r) in records.iter().enumerate() {
        if r.slot_index >= total_slots {
            return Err(Error::InvalidRecord {
                index: i,
                reason: format!("weather slot {} outside 0..{total_slots}", r.slot_index),
            });
        }
        by_slot[r.slot_index] = Some(r);
    }
    let first = by_slot
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| Error::Data("weather table has no rows".into()))?;
    let mut last = *first;
    let mut cats = Vec::with_capacity(total_slots);
    let mut temp = Vec::with_capacity(total_slots);
    let mut pm = Vec::with_capacity(total_slots);
    for slot in by_slot {
        if let Some(r) = slot {
            last = r;
        }
        cats.push(last.weather_category);
        temp.push(last.temperature);
        pm.push(last.pm25);
    }
    Ok((cats, temp, pm))
}
