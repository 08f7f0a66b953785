//! The normative column map of an input matrix.
//!
//! Columns appear in this order, each block present only when the mask keeps
//! it:
//!
//! 1. spatio-temporal lags: demand, supplied, gap, congestion, each with `b`
//!    columns ordered `t-1, t-2, ..., t-b`;
//! 2. temporal lags: for each lag `t-1 ... t-b` the block
//!    `[weather one-hot (C), temperature, pm2.5]`;
//! 3. context: time-of-day one-hot (sleep, peak, off-peak), day-of-week
//!    (1 = weekend), POI count.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LAYOUT_VERSION: u32 = 1;

pub const SPATIO_TEMPORAL_VARS: [&str; 4] = ["demand", "supplied", "gap", "congestion"];
pub const CONTEXT_FEATURES: [&str; 5] = [
    "time_of_day_sleep",
    "time_of_day_peak",
    "time_of_day_offpeak",
    "day_of_week",
    "poi",
];

/// Which variable classes enter the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureMask {
    pub spatio_temporal: bool,
    pub temporal: bool,
    pub context: bool,
}

impl FeatureMask {
    pub const ALL: FeatureMask = FeatureMask {
        spatio_temporal: true,
        temporal: true,
        context: true,
    };

    /// The six feature-ablation combinations, in reporting order.
    pub const ABLATIONS: [FeatureMask; 6] = [
        FeatureMask {
            spatio_temporal: true,
            temporal: true,
            context: false,
        },
        FeatureMask {
            spatio_temporal: true,
            temporal: false,
            context: true,
        },
        FeatureMask {
            spatio_temporal: false,
            temporal: true,
            context: true,
        },
        FeatureMask {
            spatio_temporal: true,
            temporal: false,
            context: false,
        },
        FeatureMask {
            spatio_temporal: false,
            temporal: true,
            context: false,
        },
        FeatureMask {
            spatio_temporal: false,
            temporal: false,
            context: true,
        },
    ];

    pub fn is_empty(&self) -> bool {
        !(self.spatio_temporal || self.temporal || self.context)
    }

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.spatio_temporal {
            parts.push("spatio-temporal");
        }
        if self.temporal {
            parts.push("temporal");
        }
        if self.context {
            parts.push("context");
        }
        if parts.is_empty() {
            "none".into()
        } else {
            parts.join("+")
        }
    }
}

impl Default for FeatureMask {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    /// Standardized with training statistics.
    Continuous,
    /// One-hot or binary indicator, left untouched.
    PassThrough,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureGroup {
    pub name: String,
    pub columns: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub version: u32,
    pub lookback: usize,
    pub n_weather: usize,
    pub mask: FeatureMask,
}

impl FeatureLayout {
    pub fn new(lookback: usize, n_weather: usize, mask: FeatureMask) -> Result<Self> {
        if lookback == 0 {
            return Err(Error::Config("lookback must be at least 1".into()));
        }
        if n_weather == 0 {
            return Err(Error::Config("need at least one weather category".into()));
        }
        if mask.is_empty() {
            return Err(Error::Config("feature mask removes every column".into()));
        }
        Ok(FeatureLayout {
            version: LAYOUT_VERSION,
            lookback,
            n_weather,
            mask,
        })
    }

    /// Width of one temporal lag block: weather one-hot, temperature, PM2.5.
    pub fn temporal_block(&self) -> usize {
        self.n_weather + 2
    }

    pub fn spatio_temporal_width(&self) -> usize {
        if self.mask.spatio_temporal {
            SPATIO_TEMPORAL_VARS.len() * self.lookback
        } else {
            0
        }
    }

    pub fn temporal_width(&self) -> usize {
        if self.mask.temporal {
            self.temporal_block() * self.lookback
        } else {
            0
        }
    }

    pub fn context_width(&self) -> usize {
        if self.mask.context {
            CONTEXT_FEATURES.len()
        } else {
            0
        }
    }

    pub fn n_features(&self) -> usize {
        self.spatio_temporal_width() + self.temporal_width() + self.context_width()
    }

    pub fn spatio_temporal_range(&self) -> Range<usize> {
        0..self.spatio_temporal_width()
    }

    pub fn temporal_range(&self) -> Range<usize> {
        let start = self.spatio_temporal_width();
        start..start + self.temporal_width()
    }

    pub fn context_range(&self) -> Range<usize> {
        let start = self.spatio_temporal_width() + self.temporal_width();
        start..start + self.context_width()
    }

    /// Column of spatio-temporal variable `var` at lag `lag` (1 = `t-1`).
    pub fn spatio_temporal_col(&self, var: usize, lag: usize) -> usize {
        debug_assert!(self.mask.spatio_temporal && (1..=self.lookback).contains(&lag));
        var * self.lookback + lag - 1
    }

    /// Column `j` of the temporal block at lag `lag` (1 = `t-1`).
    pub fn temporal_col(&self, lag: usize, j: usize) -> usize {
        debug_assert!(self.mask.temporal && (1..=self.lookback).contains(&lag));
        self.temporal_range().start + (lag - 1) * self.temporal_block() + j
    }

    /// Number of variables per recurrent step.
    pub fn step_width(&self) -> usize {
        let st = if self.mask.spatio_temporal {
            SPATIO_TEMPORAL_VARS.len()
        } else {
            0
        };
        let tm = if self.mask.temporal {
            self.temporal_block()
        } else {
            0
        };
        st + tm
    }

    /// For each recurrent step (oldest first, step `s` holds lag `b - s`),
    /// the input columns feeding it: spatio-temporal variables, then the
    /// temporal block.
    pub fn step_columns(&self) -> Vec<Vec<usize>> {
        let b = self.lookback;
        (0..b)
            .map(|s| {
                let lag = b - s;
                let mut cols = Vec::with_capacity(self.step_width());
                if self.mask.spatio_temporal {
                    cols.extend(
                        (0..SPATIO_TEMPORAL_VARS.len()).map(|v| self.spatio_temporal_col(v, lag)),
                    );
                }
                if self.mask.temporal {
                    cols.extend((0..self.temporal_block()).map(|j| self.temporal_col(lag, j)));
                }
                cols
            })
            .collect()
    }

    pub fn value_kinds(&self) -> Vec<ValueKind> {
        let mut kinds = vec![ValueKind::Continuous; self.spatio_temporal_width()];
        if self.mask.temporal {
            for _ in 0..self.lookback {
                kinds.extend(std::iter::repeat_n(ValueKind::PassThrough, self.n_weather));
                kinds.extend([ValueKind::Continuous, ValueKind::Continuous]);
            }
        }
        if self.mask.context {
            kinds.extend(std::iter::repeat_n(ValueKind::PassThrough, 4));
            kinds.push(ValueKind::Continuous);
        }
        kinds
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_features());
        if self.mask.spatio_temporal {
            for var in SPATIO_TEMPORAL_VARS {
                names.extend((1..=self.lookback).map(|l| format!("{var}[t-{l}]")));
            }
        }
        if self.mask.temporal {
            for l in 1..=self.lookback {
                names.extend((0..self.n_weather).map(|c| format!("weather{c}[t-{l}]")));
                names.push(format!("temperature[t-{l}]"));
                names.push(format!("pm25[t-{l}]"));
            }
        }
        if self.mask.context {
            names.extend(CONTEXT_FEATURES.iter().map(|s| s.to_string()));
        }
        names
    }

    /// Variable-level groups: one per lagged variable (all its lags, all
    /// weather categories together) and one per context feature.
    pub fn groups(&self) -> Vec<FeatureGroup> {
        let mut groups = Vec::new();
        if self.mask.spatio_temporal {
            for (v, var) in SPATIO_TEMPORAL_VARS.iter().enumerate() {
                groups.push(FeatureGroup {
                    name: var.to_string(),
                    columns: (1..=self.lookback)
                        .map(|l| self.spatio_temporal_col(v, l))
                        .collect(),
                });
            }
        }
        if self.mask.temporal {
            let lags = 1..=self.lookback;
            groups.push(FeatureGroup {
                name: "weather".into(),
                columns: lags
                    .clone()
                    .flat_map(|l| (0..self.n_weather).map(move |c| (l, c)))
                    .map(|(l, c)| self.temporal_col(l, c))
                    .collect(),
            });
            groups.push(FeatureGroup {
                name: "temperature".into(),
                columns: lags
                    .clone()
                    .map(|l| self.temporal_col(l, self.n_weather))
                    .collect(),
            });
            groups.push(FeatureGroup {
                name: "pm25".into(),
                columns: lags
                    .map(|l| self.temporal_col(l, self.n_weather + 1))
                    .collect(),
            });
        }
        if self.mask.context {
            let start = self.context_range().start;
            for (i, name) in CONTEXT_FEATURES.iter().enumerate() {
                groups.push(FeatureGroup {
                    name: name.to_string(),
                    columns: vec![start + i],
                });
            }
        }
        groups
    }

    pub fn check_compatible(&self, other: &FeatureLayout) -> Result<()> {
        if self != other {
            return Err(Error::Layout(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}
