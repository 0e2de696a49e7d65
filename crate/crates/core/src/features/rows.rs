use std::collections::HashMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::eight_hour::{eight_hour_means, max_min_mean};
use super::schema::{
    base_schema, eight_hour_index, meteo_index, pollutant_aggregate_index, pollutant_hour_index,
    Channel, FeatureDescriptor, MeteoBlock, Variant, N_CHANNELS, N_POLLUTANTS,
};
use crate::ingest::{DayBlock, Variable, HOURS_PER_DAY};

pub type Hourly = [f64; HOURS_PER_DAY];

/// One modeling day: features from day `d` (and day `d+1` meteorology),
/// target taken from day `d+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyFeatureRow {
    /// The current day `d`.
    pub date: NaiveDate,
    pub x: Vec<f64>,
    /// Next-day maximum (or maximum 8-hour mean) ozone, ppb.
    pub target_raw: f64,
    /// Same statistic on the current day, ppb.
    pub current_anchor: f64,
}

impl DailyFeatureRow {
    /// The day the target belongs to.
    pub fn target_date(&self) -> NaiveDate {
        self.date.succ_opt().expect("date overflow")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMode {
    /// Model next-day statistic minus current-day statistic.
    Delta,
    /// Model the next-day statistic itself.
    Direct,
}

pub fn delta_target(row: &DailyFeatureRow, mode: TargetMode) -> f64 {
    match mode {
        TargetMode::Delta => row.target_raw - row.current_anchor,
        TargetMode::Direct => row.target_raw,
    }
}

/// Maps a model output back to ppb of the next-day statistic.
pub fn reanchor(model_output: f64, current_anchor: f64, mode: TargetMode) -> f64 {
    match mode {
        TargetMode::Delta => model_output + current_anchor,
        TargetMode::Direct => model_output,
    }
}

/// Complete hourly pollutant series of one day, pollutant order.
pub fn pollutant_series(day: &DayBlock) -> Option<[Hourly; N_POLLUTANTS]> {
    let mut out = [[0.0; HOURS_PER_DAY]; N_POLLUTANTS];
    for (o, var) in out.iter_mut().zip(Variable::POLLUTANTS) {
        *o = day.series(var)?;
    }
    Some(out)
}

/// Complete hourly meteorological channels of one day.
pub fn channel_series(day: &DayBlock) -> Option<[Hourly; N_CHANNELS]> {
    let mut out = [[0.0; HOURS_PER_DAY]; N_CHANNELS];
    for (o, ch) in out.iter_mut().zip(Channel::ALL) {
        let raw = day.series(ch.source())?;
        for (v, r) in o.iter_mut().zip(raw) {
            *v = ch.transform(r);
        }
    }
    Some(out)
}

fn day_slots(hourly: &Hourly) -> [f64; 27] {
    let mut out = [0.0; 27];
    out[..HOURS_PER_DAY].copy_from_slice(hourly);
    let (max, min, mean) = max_min_mean(hourly);
    out[24] = max;
    out[25] = min;
    out[26] = mean;
    out
}

/// Assembles the raw base feature vector for one (current, next) day pair.
pub fn feature_vector(
    current_pollutants: &[Hourly; N_POLLUTANTS],
    current_meteo: &[Hourly; N_CHANNELS],
    next_meteo: &[Hourly; N_CHANNELS],
    variant: Variant,
) -> Vec<f64> {
    let mut x = vec![0.0; variant.base_len()];
    for (p, series) in current_pollutants.iter().enumerate() {
        let slots = day_slots(series);
        for h in 0..HOURS_PER_DAY {
            x[pollutant_hour_index(p, h)] = slots[h];
        }
        for a in 0..3 {
            x[pollutant_aggregate_index(p, a)] = slots[HOURS_PER_DAY + a];
        }
    }
    for c in 0..N_CHANNELS {
        let cur = day_slots(&current_meteo[c]);
        let next = day_slots(&next_meteo[c]);
        for k in 0..27 {
            x[meteo_index(c, MeteoBlock::Current, k)] = cur[k];
            x[meteo_index(c, MeteoBlock::Next, k)] = next[k];
            x[meteo_index(c, MeteoBlock::Diff, k)] = next[k] - cur[k];
        }
    }
    if variant == Variant::Max8h {
        let m = eight_hour_means(&current_pollutants[0]);
        for (k, v) in m.means.iter().enumerate() {
            x[eight_hour_index(k)] = *v;
        }
        x[eight_hour_index(17)] = m.max;
        x[eight_hour_index(18)] = m.min;
        x[eight_hour_index(19)] = m.mean;
    }
    x
}

/// The statistic the variant forecasts, evaluated on one day of ozone.
pub fn daily_statistic(o3: &Hourly, variant: Variant) -> f64 {
    match variant {
        Variant::Max => o3.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Variant::Max8h => eight_hour_means(o3).max,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedDay {
    pub date: NaiveDate,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub variant: Variant,
    pub schema: Vec<FeatureDescriptor>,
    pub rows: Vec<DailyFeatureRow>,
    pub skipped: Vec<SkippedDay>,
}

/// Builds one row per usable day pair `(d, d+1)`.
///
/// Day `d` must be complete for all 14 variables; day `d+1` must be complete
/// for ozone (the target) and for the meteorology source. When `forecast`
/// is given, next-day meteorology is read from it instead of the
/// observations.
pub fn build_base_features(
    days: &[DayBlock],
    forecast: Option<&[DayBlock]>,
    variant: Variant,
) -> FeatureSet {
    let by_date: HashMap<NaiveDate, &DayBlock> = days.iter().map(|d| (d.date, d)).collect();
    let forecast_by_date: Option<HashMap<NaiveDate, &DayBlock>> =
        forecast.map(|f| f.iter().map(|d| (d.date, d)).collect());

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut skip = |date: NaiveDate, reason: String| {
        log::debug!("skipping {date}: {reason}");
        skipped.push(SkippedDay { date, reason });
    };

    for day in days {
        let Some(next_date) = day.date.succ_opt() else {
            continue;
        };
        let Some(next) = by_date.get(&next_date) else {
            skip(day.date, "no successor day".into());
            continue;
        };
        let (Some(cur_p), Some(cur_m)) = (pollutant_series(day), channel_series(day)) else {
            skip(day.date, "current day incomplete".into());
            continue;
        };
        let Some(next_o3) = next.series(Variable::O3) else {
            skip(day.date, "next-day ozone incomplete".into());
            continue;
        };
        let meteo_source = match &forecast_by_date {
            Some(f) => match f.get(&next_date) {
                Some(b) => *b,
                None => {
                    skip(day.date, "no forecast for next day".into());
                    continue;
                }
            },
            None => *next,
        };
        let Some(next_m) = channel_series(meteo_source) else {
            skip(day.date, "next-day meteorology incomplete".into());
            continue;
        };
        rows.push(DailyFeatureRow {
            date: day.date,
            x: feature_vector(&cur_p, &cur_m, &next_m, variant),
            target_raw: daily_statistic(&next_o3, variant),
            current_anchor: daily_statistic(&cur_p[0], variant),
        });
    }

    FeatureSet {
        variant,
        schema: base_schema(variant),
        rows,
        skipped,
    }
}
