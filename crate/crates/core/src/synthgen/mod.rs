//! Synthetic zone-slot datasets with a planted dependency between each zone
//! and its neighbours on a hidden grid. Zone ids are shuffled before output,
//! so the grid cannot be read off the data.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::{write_tables, SpaceTimeGrid, ZoneSlotFrame};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const TRUTH_FILE: &str = "truth.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub n_zones: usize,
    pub n_days: usize,
    pub slot_minutes: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub base_demand_scale: f64,
    /// Weight of the lagged hidden-neighbour mean in each zone's deviation.
    pub spatial_diffusion: f64,
    /// Weight of the zone's own lagged deviation.
    pub temporal_ar: f64,
    pub supply_ratio_mean: f64,
    /// Standard deviation of the per-slot innovation, in orders.
    pub noise_std: f64,
    pub n_weather_categories: usize,
    /// Relative demand increase under the worst weather category.
    pub weather_effect: f64,
    /// 1 makes congestion track demand, 0 makes it pure noise.
    pub congestion_coupling: f64,
    pub start_weekday: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_zones: 20,
            n_days: 10,
            slot_minutes: 10,
            grid_rows: 5,
            grid_cols: 4,
            base_demand_scale: 20.0,
            spatial_diffusion: 0.4,
            temporal_ar: 0.5,
            supply_ratio_mean: 0.8,
            noise_std: 3.0,
            n_weather_categories: 3,
            weather_effect: 0.2,
            congestion_coupling: 1.0,
            start_weekday: 0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        SpaceTimeGrid::new(self.n_zones, self.slot_minutes, self.n_days)?
            .with_start_weekday(self.start_weekday)?;
        if self.grid_rows * self.grid_cols < self.n_zones {
            return bad(format!(
                "hidden grid {}x{} cannot hold {} zones",
                self.grid_rows, self.grid_cols, self.n_zones
            ));
        }
        if !(0.0..1.0).contains(&self.spatial_diffusion) {
            return bad(format!(
                "spatial_diffusion {} outside [0, 1)",
                self.spatial_diffusion
            ));
        }
        if !(self.temporal_ar > -1.0 && self.temporal_ar < 1.0) {
            return bad(format!("temporal_ar {} outside (-1, 1)", self.temporal_ar));
        }
        if self.temporal_ar.abs() + self.spatial_diffusion >= 1.0 {
            return bad(format!(
                "|temporal_ar| + spatial_diffusion = {} must stay below 1",
                self.temporal_ar.abs() + self.spatial_diffusion
            ));
        }
        if !(self.supply_ratio_mean > 0.0 && self.supply_ratio_mean <= 1.0) {
            return bad(format!(
                "supply_ratio_mean {} outside (0, 1]",
                self.supply_ratio_mean
            ));
        }
        if !(self.base_demand_scale > 0.0 && self.base_demand_scale.is_finite()) {
            return bad("base_demand_scale must be positive".into());
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative".into());
        }
        if self.n_weather_categories == 0 {
            return bad("n_weather_categories must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.congestion_coupling) {
            return bad("congestion_coupling must lie in [0, 1]".into());
        }
        if !self.weather_effect.is_finite() {
            return bad("weather_effect must be finite".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<SpaceTimeGrid> {
        SpaceTimeGrid::new(self.n_zones, self.slot_minutes, self.n_days)?
            .with_start_weekday(self.start_weekday)
    }
}

/// Generating structure, for verification only.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthTruth {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Hidden grid cell `(row, col)` of each published zone id.
    pub zone_cell: Vec<(usize, usize)>,
    /// Published zone id of each hidden cell index `row * cols + col`.
    pub permutation: Vec<usize>,
    /// Base demand level of each published zone id.
    pub base: Vec<f64>,
    pub spatial_diffusion: f64,
    pub temporal_ar: f64,
    pub weather_effect: f64,
    pub congestion_coupling: f64,
}

impl SynthTruth {
    /// Published ids of the 4-neighbours of `zone` on the hidden grid.
    pub fn neighbors(&self, zone: usize) -> Vec<usize> {
        neighbors_of(&self.zone_cell, zone)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["zone_id", "hidden_row", "hidden_col"])
            .map_err(|e| Error::csv(path, e))?;
        for (z, (r, c)) in self.zone_cell.iter().enumerate() {
            w.write_record([z.to_string(), r.to_string(), c.to_string()])
                .map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn neighbors_of(cells: &[(usize, usize)], zone: usize) -> Vec<usize> {
    let (r, c) = cells[zone];
    cells
        .iter()
        .enumerate()
        .filter(|&(_, &(r2, c2))| r.abs_diff(r2) + c.abs_diff(c2) == 1)
        .map(|(z, _)| z)
        .collect()
}

/// Mean daily demand profile at hour `h` (0..24): night trough, morning
/// and evening peaks.
fn daily_profile(h: f64, weekend: bool) -> f64 {
    let bump = |centre: f64, width: f64| (-((h - centre) / width).powi(2)).exp();
    if weekend {
        0.35 + 0.5 * bump(11.0, 3.0) + 0.6 * bump(19.0, 3.0)
    } else {
        0.3 + 0.9 * bump(8.0, 1.5) + 0.3 * bump(13.0, 2.5) + 0.8 * bump(18.0, 2.0)
    }
}

/// Deterministic seasonal demand multiplier of slot `t`.
pub fn season(grid: &SpaceTimeGrid, t: usize) -> f64 {
    let h = (grid.slot_of_day(t) * grid.slot_minutes) as f64 / 60.0;
    daily_profile(h, grid.is_weekend(t))
}

/// Generates a frame and its hidden structure. Pure in `config`.
pub fn generate(config: &SynthConfig) -> Result<(ZoneSlotFrame, SynthTruth)> {
    config.validate()?;
    let grid = config.grid()?;
    let (n, t_total) = (config.n_zones, grid.total_slots());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let std_normal: Normal<f64> = Normal::new(0.0, 1.0).expect("unit normal");

    // hidden-order quantities
    let hidden_cells: Vec<(usize, usize)> = (0..n)
        .map(|h| (h / config.grid_cols, h % config.grid_cols))
        .collect();
    let hidden_nbrs: Vec<Vec<usize>> = (0..n).map(|h| neighbors_of(&hidden_cells, h)).collect();
    let base: Vec<f64> = (0..n)
        .map(|_| {
            config.base_demand_scale * (0.5 * std_normal.sample(&mut rng)).exp().clamp(0.3, 3.0)
        })
        .collect();

    let c = config.n_weather_categories;
    let mut weather_category = Vec::with_capacity(t_total);
    let mut temperature = Vec::with_capacity(t_total);
    let mut pm25 = Vec::with_capacity(t_total);
    let mut w = 0usize;
    let mut pm = 60.0;
    for t in 0..t_total {
        if t > 0 && rng.random::<f64>() < 0.02 {
            w = rng.random_range(0..c);
        }
        weather_category.push(w);
        let h = (grid.slot_of_day(t) * grid.slot_minutes) as f64 / 60.0;
        let temp = 15.0
            + 8.0 * ((h - 9.0) / 24.0 * std::f64::consts::TAU).sin()
            + 0.5 * std_normal.sample(&mut rng);
        temperature.push(temp);
        pm = (0.98 * pm + 0.02 * 60.0 + 2.0 * std_normal.sample(&mut rng)).max(1.0);
        pm25.push(pm);
    }
    let weather_level = |k: usize| {
        if c > 1 {
            k as f64 / (c - 1) as f64
        } else {
            0.0
        }
    };

    let cong_scale = 0.6;
    let mut demand = Tensor::zeros(&[n, t_total]);
    let mut supplied = Tensor::zeros(&[n, t_total]);
    let mut congestion = Tensor::zeros(&[n, t_total]);
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    for t in 0..t_total {
        let s = season(&grid, t);
        let wl = weather_level(weather_category[t]);
        for h in 0..n {
            let nbr_mean = if hidden_nbrs[h].is_empty() {
                0.0
            } else {
                hidden_nbrs[h].iter().map(|&q| u[q]).sum::<f64>() / hidden_nbrs[h].len() as f64
            };
            next[h] = config.temporal_ar * u[h]
                + config.spatial_diffusion * nbr_mean
                + config.noise_std * std_normal.sample(&mut rng);
        }
        std::mem::swap(&mut u, &mut next);
        for h in 0..n {
            let mean = base[h] * s * (1.0 + config.weather_effect * wl);
            let d = (mean + u[h]).max(0.0).round();
            let k = config.congestion_coupling;
            let tc_mean = cong_scale * (k * d + (1.0 - k) * base[h] * 0.7) + 0.1;
            let tc = Poisson::new(tc_mean)
                .expect("positive mean")
                .sample(&mut rng)
                .round();
            // heavier congestion lowers the match rate
            let rel = tc / (cong_scale * base[h] + 0.1) - 0.7;
            let rate = (config.supply_ratio_mean - 0.1 * rel + 0.05 * std_normal.sample(&mut rng))
                .clamp(0.05, 1.0);
            let sup = Binomial::new(d as u64, rate)
                .expect("valid binomial")
                .sample(&mut rng) as f64;
            demand.set2(h, t, d);
            supplied.set2(h, t, sup);
            congestion.set2(h, t, tc);
        }
    }

    // published id of hidden zone h
    let mut permutation: Vec<usize> = (0..n).collect();
    permutation.shuffle(&mut rng);
    let mut zone_cell = vec![(0, 0); n];
    let mut out_base = vec![0.0; n];
    let permute = |src: &Tensor| {
        let mut dst = Tensor::zeros(&[n, t_total]);
        for (h, &z) in permutation.iter().enumerate() {
            dst.row_mut(z).copy_from_slice(src.row(h));
        }
        dst
    };
    let demand = permute(&demand);
    let supplied = permute(&supplied);
    let congestion = permute(&congestion);
    for (h, &z) in permutation.iter().enumerate() {
        zone_cell[z] = hidden_cells[h];
        out_base[z] = base[h];
    }
    let mut gap = demand.clone();
    for (g, s) in gap.data_mut().iter_mut().zip(supplied.data()) {
        *g -= s;
    }
    let poi = out_base.iter().map(|b| (b * 2.0).round()).collect();

    let frame = ZoneSlotFrame {
        grid,
        demand,
        supplied,
        gap,
        congestion,
        n_weather_categories: c,
        weather_category,
        temperature,
        pm25,
        poi,
    };
    frame.validate()?;
    let truth = SynthTruth {
        grid_rows: config.grid_rows,
        grid_cols: config.grid_cols,
        zone_cell,
        permutation,
        base: out_base,
        spatial_diffusion: config.spatial_diffusion,
        temporal_ar: config.temporal_ar,
        weather_effect: config.weather_effect,
        congestion_coupling: config.congestion_coupling,
    };
    Ok((frame, truth))
}

/// Writes the four data tables and the truth file into `dir`.
pub fn write_synth(dir: &Path, frame: &ZoneSlotFrame, truth: &SynthTruth) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_tables(dir, &frame.to_tables())?;
    truth.write_csv(&dir.join(TRUTH_FILE))
}

/// Demand minus each zone's mean at the same slot of day.
fn detrended(frame: &ZoneSlotFrame) -> Tensor {
    let (n, t_total) = (frame.num_zones(), frame.total_slots());
    let spd = frame.grid.slots_per_day();
    let mut sum = Tensor::zeros(&[n, spd]);
    let mut count = vec![0.0; spd];
    for t in 0..t_total {
        let k = frame.grid.slot_of_day(t);
        count[k] += 1.0;
        for p in 0..n {
            sum.set2(p, k, sum.at2(p, k) + frame.demand.at2(p, t));
        }
    }
    let mut out = frame.demand.clone();
    for p in 0..n {
        for t in 0..t_total {
            let k = frame.grid.slot_of_day(t);
            out.set2(p, t, out.at2(p, t) - sum.at2(p, k) / count[k]);
        }
    }
    out
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa > 0.0 && sbb > 0.0 {
        sab / (saa * sbb).sqrt()
    } else {
        0.0
    }
}

fn signal_score(frame: &ZoneSlotFrame, cells: &[(usize, usize)]) -> f64 {
    let r = detrended(frame);
    let (n, t_total) = (frame.num_zones(), frame.total_slots());
    let mut total = 0.0;
    let mut zones = 0;
    for p in 0..n {
        let nbrs = neighbors_of(cells, p);
        if nbrs.is_empty() || t_total < 3 {
            continue;
        }
        let own: Vec<f64> = (1..t_total).map(|t| r.at2(p, t)).collect();
        let lagged: Vec<f64> = (1..t_total)
            .map(|t| nbrs.iter().map(|&q| r.at2(q, t - 1)).sum::<f64>() / nbrs.len() as f64)
            .collect();
        total += correlation(&own, &lagged);
        zones += 1;
    }
    if zones == 0 {
        0.0
    } else {
        total / zones as f64
    }
}

/// Mean over zones of the correlation between a zone's detrended demand and
/// the lag-1 mean of its hidden-grid neighbours.
pub fn planted_signal_score(frame: &ZoneSlotFrame, truth: &SynthTruth) -> Result<f64> {
    if truth.zone_cell.len() != frame.num_zones() {
        return Err(Error::Data(format!(
            "truth covers {} zones, frame {}",
            truth.zone_cell.len(),
            frame.num_zones()
        )));
    }
    Ok(signal_score(frame, &truth.zone_cell))
}

/// The same statistic after randomly reassigning zones to hidden cells.
pub fn permuted_signal_score(frame: &ZoneSlotFrame, truth: &SynthTruth, seed: u64) -> Result<f64> {
    let mut cells = truth.zone_cell.clone();
    cells.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let relabeled = SynthTruth {
        zone_cell: cells,
        ..truth.clone()
    };
    planted_signal_score(frame, &relabeled)
}
