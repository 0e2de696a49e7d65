//! Hourly station data ingestion.
//!
//! Pollutant and meteorology files are parsed independently against a
//! [`HourlySchema`], overlaid onto one hourly calendar, and grouped into
//! [`DayBlock`]s. Short interior gaps are linearly interpolated; anything the
//! gap policy cannot repair leaves the variable flagged incomplete for that
//! day. Timestamps are local standard time, hour-beginning.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowRejection};

pub const HOURS_PER_DAY: usize = 24;
pub const N_VARIABLES: usize = 14;
pub const DEFAULT_MAX_GAP_HOURS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    O3,
    So2,
    No,
    No2,
    Nox,
    Co,
    Pm25,
    Temperature,
    DewPoint,
    RelHumidity,
    WindDirection,
    WindSpeed,
    Visibility,
    Pressure,
}

impl Variable {
    pub const ALL: [Variable; N_VARIABLES] = [
        Variable::O3,
        Variable::So2,
        Variable::No,
        Variable::No2,
        Variable::Nox,
        Variable::Co,
        Variable::Pm25,
        Variable::Temperature,
        Variable::DewPoint,
        Variable::RelHumidity,
        Variable::WindDirection,
        Variable::WindSpeed,
        Variable::Visibility,
        Variable::Pressure,
    ];

    pub const POLLUTANTS: [Variable; 7] = [
        Variable::O3,
        Variable::So2,
        Variable::No,
        Variable::No2,
        Variable::Nox,
        Variable::Co,
        Variable::Pm25,
    ];

    pub const METEOROLOGY: [Variable; 7] = [
        Variable::Temperature,
        Variable::DewPoint,
        Variable::RelHumidity,
        Variable::WindDirection,
        Variable::WindSpeed,
        Variable::Visibility,
        Variable::Pressure,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Canonical column name, also used as the default header.
    pub fn column_name(self) -> &'static str {
        match self {
            Variable::O3 => "o3",
            Variable::So2 => "so2",
            Variable::No => "no",
            Variable::No2 => "no2",
            Variable::Nox => "nox",
            Variable::Co => "co",
            Variable::Pm25 => "pm25",
            Variable::Temperature => "temperature",
            Variable::DewPoint => "dew_point",
            Variable::RelHumidity => "rel_humidity",
            Variable::WindDirection => "wind_direction",
            Variable::WindSpeed => "wind_speed",
            Variable::Visibility => "visibility",
            Variable::Pressure => "pressure",
        }
    }

    pub fn from_column_name(name: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.column_name() == name)
    }

    pub fn is_pollutant(self) -> bool {
        self.index() < 7
    }
}

/// One station-hour. Every reading is independently optional.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyRecord {
    pub date: NaiveDate,
    pub hour: u8,
    pub values: [Option<f64>; N_VARIABLES],
}

impl HourlyRecord {
    pub fn empty(date: NaiveDate, hour: u8) -> Self {
        Self {
            date,
            hour,
            values: [None; N_VARIABLES],
        }
    }

    #[inline]
    pub fn get(&self, var: Variable) -> Option<f64> {
        self.values[var.index()]
    }

    /// Stores a reading after applying the range rules: relative humidity
    /// outside [0, 100] is treated as missing and wind direction is wrapped
    /// into [0, 360).
    pub fn set(&mut self, var: Variable, value: Option<f64>) {
        let value = value.filter(|v| v.is_finite()).and_then(|v| match var {
            Variable::RelHumidity if !(0.0..=100.0).contains(&v) => None,
            Variable::WindDirection => Some(v.rem_euclid(360.0)),
            _ => Some(v),
        });
        self.values[var.index()] = value;
    }
}

/// Column mapping for one delimited hourly file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlySchema {
    pub date_column: String,
    pub hour_column: String,
    /// Variables this file provides and the header name of each.
    pub columns: Vec<(Variable, String)>,
    pub delimiter: u8,
    /// Cell values meaning "missing". Empty cells are always missing.
    pub sentinels: Vec<String>,
}

impl HourlySchema {
    fn with_variables(vars: &[Variable]) -> Self {
        Self {
            date_column: "date".into(),
            hour_column: "hour".into(),
            columns: vars
                .iter()
                .map(|v| (*v, v.column_name().to_string()))
                .collect(),
            delimiter: b',',
            sentinels: Vec::new(),
        }
    }

    /// All 14 variables under their canonical names.
    pub fn canonical() -> Self {
        Self::with_variables(&Variable::ALL)
    }

    pub fn pollutants() -> Self {
        Self::with_variables(&Variable::POLLUTANTS)
    }

    pub fn meteorology() -> Self {
        Self::with_variables(&Variable::METEOROLOGY)
    }

    fn is_missing(&self, cell: &str) -> bool {
        cell.is_empty() || self.sentinels.iter().any(|s| s == cell)
    }
}

/// Output of [`parse_hourly_file`]: accepted records plus rejected rows.
#[derive(Debug, Clone, Default)]
pub struct ParsedHourly {
    pub records: Vec<HourlyRecord>,
    pub rejected: Vec<RowRejection>,
    /// Numeric cells that failed to parse and were stored as missing.
    pub unparseable_cells: usize,
}

pub fn parse_hourly_file(path: &Path, schema: &HourlySchema) -> Result<ParsedHourly> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    file.read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    parse_hourly_str(&text, schema, path)
}

/// Parses delimited hourly text. `origin` only labels errors.
pub fn parse_hourly_str(text: &str, schema: &HourlySchema, origin: &Path) -> Result<ParsedHourly> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyInput {
            path: origin.to_path_buf(),
        });
    }
    let find = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MalformedHeader {
                path: origin.to_path_buf(),
                reason: format!("missing column '{name}'"),
            })
    };
    let date_idx = find(&schema.date_column)?;
    let hour_idx = find(&schema.hour_column)?;
    let var_idx: Vec<(Variable, usize)> = schema
        .columns
        .iter()
        .map(|(v, name)| find(name).map(|i| (*v, i)))
        .collect::<Result<_>>()?;

    let mut out = ParsedHourly::default();
    let mut seen: BTreeMap<(NaiveDate, u8), usize> = BTreeMap::new();
    let mut n_rows = 0usize;

    for (i, row) in reader.records().enumerate() {
        // header is line 1
        let line = i + 2;
        let row = row?;
        if row.iter().all(|c| c.is_empty()) {
            continue;
        }
        n_rows += 1;
        let date = match row
            .get(date_idx)
            .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok())
        {
            Some(d) => d,
            None => {
                out.rejected.push(RowRejection {
                    line,
                    reason: format!("unparseable date '{}'", row.get(date_idx).unwrap_or("")),
                });
                continue;
            }
        };
        let hour = match row.get(hour_idx).and_then(parse_hour) {
            Some(h) => h,
            None => {
                out.rejected.push(RowRejection {
                    line,
                    reason: format!("unparseable hour '{}'", row.get(hour_idx).unwrap_or("")),
                });
                continue;
            }
        };
        if seen.insert((date, hour), line).is_some() {
            return Err(Error::DuplicateTimestamp { date, hour });
        }
        let mut rec = HourlyRecord::empty(date, hour);
        for &(var, idx) in &var_idx {
            let cell = row.get(idx).unwrap_or("");
            if schema.is_missing(cell) {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) => rec.set(var, Some(v)),
                Err(_) => out.unparseable_cells += 1,
            }
        }
        out.records.push(rec);
    }

    if n_rows == 0 {
        return Err(Error::EmptyInput {
            path: origin.to_path_buf(),
        });
    }
    Ok(out)
}

/// Accepts `14`, `14:00` or `14:00:00`.
fn parse_hour(cell: &str) -> Option<u8> {
    let mut parts = cell.split(':');
    let h: u8 = parts.next()?.parse().ok()?;
    if parts.any(|p| p.parse::<u32>().map_or(true, |m| m != 0)) {
        return None;
    }
    (h < 24).then_some(h)
}

/// Overlays several parsed sources onto one hourly calendar. Where two
/// sources both carry a reading for the same variable and hour, the earlier
/// source wins.
pub fn merge_sources(sources: &[Vec<HourlyRecord>]) -> Vec<HourlyRecord> {
    let mut merged: BTreeMap<(NaiveDate, u8), HourlyRecord> = BTreeMap::new();
    for source in sources {
        for rec in source {
            let slot = merged
                .entry((rec.date, rec.hour))
                .or_insert_with(|| HourlyRecord::empty(rec.date, rec.hour));
            for (dst, src) in slot.values.iter_mut().zip(rec.values.iter()) {
                if dst.is_none() {
                    *dst = *src;
                }
            }
        }
    }
    merged.into_values().collect()
}

/// One calendar day of 24 hourly slots after gap filling.
#[derive(Debug, Clone, PartialEq)]
pub struct DayBlock {
    pub date: NaiveDate,
    /// Slot `k` holds hour-of-day `k`.
    pub hours: Vec<HourlyRecord>,
    /// Per variable: every hour usable after gap filling.
    pub complete: [bool; N_VARIABLES],
    /// Per variable: number of hours filled by interpolation.
    pub interpolated: [usize; N_VARIABLES],
}

impl DayBlock {
    pub fn is_complete(&self, var: Variable) -> bool {
        self.complete[var.index()]
    }

    pub fn all_complete(&self, vars: &[Variable]) -> bool {
        vars.iter().all(|v| self.is_complete(*v))
    }

    /// The 24 hourly values of `var`, or `None` if any hour is missing.
    pub fn series(&self, var: Variable) -> Option<[f64; HOURS_PER_DAY]> {
        let mut out = [0.0; HOURS_PER_DAY];
        for (o, rec) in out.iter_mut().zip(&self.hours) {
            *o = rec.get(var)?;
        }
        Some(out)
    }

    pub fn interpolated_total(&self) -> usize {
        self.interpolated.iter().sum()
    }
}

/// Groups records into days and applies the gap policy: interior runs of at
/// most `max_gap_hours` missing hours are filled by linear interpolation
/// between the nearest present neighbours of the same day. Longer runs and
/// runs touching midnight leave the variable incomplete.
pub fn assemble_days(records: &[HourlyRecord], max_gap_hours: usize) -> Vec<DayBlock> {
    let mut by_date: BTreeMap<NaiveDate, Vec<HourlyRecord>> = BTreeMap::new();
    for rec in records {
        let slots = by_date.entry(rec.date).or_insert_with(|| {
            (0..HOURS_PER_DAY as u8)
                .map(|h| HourlyRecord::empty(rec.date, h))
                .collect()
        });
        slots[rec.hour as usize] = rec.clone();
    }

    by_date
        .into_iter()
        .map(|(date, mut hours)| {
            let mut complete = [false; N_VARIABLES];
            let mut interpolated = [0usize; N_VARIABLES];
            for var in Variable::ALL {
                let mut series: Vec<Option<f64>> = hours.iter().map(|r| r.get(var)).collect();
                let (filled, ok) = fill_gaps(&mut series, max_gap_hours);
                for (rec, v) in hours.iter_mut().zip(series) {
                    rec.values[var.index()] = v;
                }
                complete[var.index()] = ok;
                interpolated[var.index()] = filled;
            }
            DayBlock {
                date,
                hours,
                complete,
                interpolated,
            }
        })
        .collect()
}

/// Fills qualifying interior gaps in place. Returns the number of filled
/// cells and whether the series ended up fully present.
fn fill_gaps(series: &mut [Option<f64>], max_gap: usize) -> (usize, bool) {
    let mut filled = 0;
    let mut complete = true;
    let mut k = 0;
    while k < series.len() {
        if series[k].is_some() {
            k += 1;
            continue;
        }
        let start = k;
        while k < series.len() && series[k].is_none() {
            k += 1;
        }
        let len = k - start;
        let left = start.checked_sub(1).and_then(|i| series[i].map(|v| (i, v)));
        let right = series.get(k).copied().flatten().map(|v| (k, v));
        match (left, right) {
            (Some((a, va)), Some((b, vb))) if len <= max_gap => {
                let span = (b - a) as f64;
                for (i, slot) in series.iter_mut().enumerate().take(b).skip(a + 1) {
                    *slot = Some(va + (vb - va) * (i - a) as f64 / span);
                }
                filled += len;
            }
            _ => complete = false,
        }
    }
    (filled, complete)
}

/// Writes hourly records in the canonical column order
/// (date, hour, 7 pollutants, 7 meteorology variables). Missing cells are empty.
pub fn write_canonical<W: std::io::Write>(out: W, records: &[HourlyRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string(), "hour".to_string()];
    header.extend(Variable::ALL.iter().map(|v| v.column_name().to_string()));
    w.write_record(&header)?;
    for rec in records {
        let mut row = vec![rec.date.format("%Y-%m-%d").to_string(), rec.hour.to_string()];
        row.extend(
            rec.values
                .iter()
                .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<canonical output>", e))?;
    Ok(())
}
