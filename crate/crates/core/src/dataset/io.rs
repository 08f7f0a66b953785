//! Delimited-text tables exchanged with data producers.
//!
//! | file             | columns                                           |
//! |------------------|---------------------------------------------------|
//! | `orders.csv`     | `zone_id,slot_index,matched` (matched is 0 or 1)  |
//! | `congestion.csv` | `zone_id,slot_index,level1,level2,level3,level4`  |
//! | `weather.csv`    | `slot_index,weather_category,temperature,pm25`    |
//! | `poi.csv`        | `zone_id,poi_count`                               |

use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::OrderRecord;
use crate::error::{Error, Result};

pub const ORDERS_FILE: &str = "orders.csv";
pub const CONGESTION_FILE: &str = "congestion.csv";
pub const WEATHER_FILE: &str = "weather.csv";
pub const POI_FILE: &str = "poi.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CongestionRecord {
    pub zone_id: usize,
    pub slot_index: usize,
    pub levels: [u64; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRecord {
    pub slot_index: usize,
    pub weather_category: usize,
    pub temperature: f64,
    pub pm25: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoiRecord {
    pub zone_id: usize,
    pub poi_count: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTables {
    pub orders: Vec<OrderRecord>,
    pub congestion: Vec<CongestionRecord>,
    pub weather: Vec<WeatherRecord>,
    pub poi: Vec<PoiRecord>,
}

impl RawTables {
    /// Largest slot index referenced by any table, if any.
    pub fn max_slot(&self) -> Option<usize> {
        let o = self.orders.iter().map(|r| r.slot_index);
        let c = self.congestion.iter().map(|r| r.slot_index);
        let w = self.weather.iter().map(|r| r.slot_index);
        o.chain(c).chain(w).max()
    }

    /// Number of zones implied by the POI table (one row per zone).
    pub fn zone_count(&self) -> usize {
        self.poi.iter().map(|r| r.zone_id + 1).max().unwrap_or(0)
    }
}

#[derive(Serialize, Deserialize)]
struct OrderRow {
    zone_id: usize,
    slot_index: usize,
    matched: u8,
}

#[derive(Serialize, Deserialize)]
struct CongestionRow {
    zone_id: usize,
    slot_index: usize,
    level1: u64,
    level2: u64,
    level3: u64,
    level4: u64,
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::csv(path, e))?;
    rdr.deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()
        .map_err(|e| Error::csv(path, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_tables(dir: &Path) -> Result<RawTables> {
    let path = dir.join(ORDERS_FILE);
    let orders = read_rows::<OrderRow>(&path)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let matched = match r.matched {
                0 => false,
                1 => true,
                v => {
                    return Err(Error::InvalidRecord {
                        index: i,
                        reason: format!("{}: matched must be 0 or 1, got {v}", path.display()),
                    })
                }
            };
            Ok(OrderRecord {
                zone_id: r.zone_id,
                slot_index: r.slot_index,
                matched,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let congestion = read_rows::<CongestionRow>(&dir.join(CONGESTION_FILE))?
        .into_iter()
        .map(|r| CongestionRecord {
            zone_id: r.zone_id,
            slot_index: r.slot_index,
            levels: [r.level1, r.level2, r.level3, r.level4],
        })
        .collect();
    let weather = read_rows(&dir.join(WEATHER_FILE))?;
    let poi = read_rows(&dir.join(POI_FILE))?;
    Ok(RawTables {
        orders,
        congestion,
        weather,
        poi,
    })
}

pub fn write_tables(dir: &Path, tables: &RawTables) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_rows(
        &dir.join(ORDERS_FILE),
        tables.orders.iter().map(|r| OrderRow {
            zone_id: r.zone_id,
            slot_index: r.slot_index,
            matched: r.matched as u8,
        }),
    )?;
    write_rows(
        &dir.join(CONGESTION_FILE),
        tables.congestion.iter().map(|r| CongestionRow {
            zone_id: r.zone_id,
            slot_index: r.slot_index,
            level1: r.levels[0],
            level2: r.levels[1],
            level3: r.levels[2],
            level4: r.levels[3],
        }),
    )?;
    write_rows(&dir.join(WEATHER_FILE), &tables.weather)?;
    write_rows(&dir.join(POI_FILE), &tables.poi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_matched_flag() {
        let dir = tempfile::tempdir().unwrap();
        write_tables(dir.path(), &RawTables::default()).unwrap();
        std::fs::write(
            dir.path().join(ORDERS_FILE),
            "zone_id,slot_index,matched\n0,0,1\n0,1,2\n",
        )
        .unwrap();
        match load_tables(dir.path()) {
            Err(Error::InvalidRecord { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_tables(dir.path()).is_err());
    }
}
