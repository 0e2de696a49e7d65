//! Canonical base feature ordering.
//!
//! Layout of the base vector:
//!
//! 1. pollutant hourly values, pollutant-major (7 × 24)
//! 2. pollutant max/min/mean (7 × 3), 189 pollutant features in total
//! 3. for each of the 9 meteorological channels: current day (24 hourly +
//!    max/min/mean), next day (same 27), next-minus-current (27), 729 in total
//! 4. `max8h` only: 17 current-day 8-hour means plus their max/min/mean

use serde::{Deserialize, Serialize};

use super::eight_hour::N_WINDOWS;
use crate::ingest::{Variable, HOURS_PER_DAY};

pub const N_POLLUTANTS: usize = 7;
pub const N_CHANNELS: usize = 9;
pub const N_AGGREGATES: usize = 3;
pub const PER_DAY: usize = HOURS_PER_DAY + N_AGGREGATES;
pub const POLLUTANT_FEATURES: usize = N_POLLUTANTS * HOURS_PER_DAY + N_POLLUTANTS * N_AGGREGATES;
pub const METEO_FEATURES: usize = N_CHANNELS * PER_DAY * 3;
pub const EIGHT_HOUR_FEATURES: usize = N_WINDOWS + N_AGGREGATES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Next-day maximum hourly ozone.
    Max,
    /// Next-day maximum 8-hour-mean ozone.
    Max8h,
}

impl Variant {
    pub fn base_len(self) -> usize {
        match self {
            Variant::Max => POLLUTANT_FEATURES + METEO_FEATURES,
            Variant::Max8h => POLLUTANT_FEATURES + METEO_FEATURES + EIGHT_HOUR_FEATURES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    PollutantHourly,
    PollutantAggregate,
    MeteoHourly,
    MeteoAggregate,
    MeteoDiff,
    EightHourMean,
    Square,
    Interaction,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::PollutantHourly => "pollutant-hourly",
            Category::PollutantAggregate => "pollutant-aggregate",
            Category::MeteoHourly => "meteo-hourly",
            Category::MeteoAggregate => "meteo-aggregate",
            Category::MeteoDiff => "meteo-diff",
            Category::EightHourMean => "eight-hour-mean",
            Category::Square => "square",
            Category::Interaction => "interaction",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub index: usize,
    pub name: String,
    pub category: Category,
    /// Base-feature parents of an expanded feature; `[j, j]` for a square.
    pub parents: Option<[usize; 2]>,
}

/// Meteorological channels: the seven observed variables plus the cosine
/// and sine of wind direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Temperature,
    DewPoint,
    RelHumidity,
    WindDirDeg,
    WindDirCos,
    WindDirSin,
    WindSpeed,
    Visibility,
    Pressure,
}

impl Channel {
    pub const ALL: [Channel; N_CHANNELS] = [
        Channel::Temperature,
        Channel::DewPoint,
        Channel::RelHumidity,
        Channel::WindDirDeg,
        Channel::WindDirCos,
        Channel::WindDirSin,
        Channel::WindSpeed,
        Channel::Visibility,
        Channel::Pressure,
    ];

    pub fn source(self) -> Variable {
        match self {
            Channel::Temperature => Variable::Temperature,
            Channel::DewPoint => Variable::DewPoint,
            Channel::RelHumidity => Variable::RelHumidity,
            Channel::WindDirDeg | Channel::WindDirCos | Channel::WindDirSin => {
                Variable::WindDirection
            }
            Channel::WindSpeed => Variable::WindSpeed,
            Channel::Visibility => Variable::Visibility,
            Channel::Pressure => Variable::Pressure,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Channel::Temperature => "temperature",
            Channel::DewPoint => "dew_point",
            Channel::RelHumidity => "rel_humidity",
            Channel::WindDirDeg => "wind_dir_deg",
            Channel::WindDirCos => "wind_dir_cos",
            Channel::WindDirSin => "wind_dir_sin",
            Channel::WindSpeed => "wind_speed",
            Channel::Visibility => "visibility",
            Channel::Pressure => "pressure",
        }
    }

    /// Maps a raw reading of the source variable onto this channel.
    #[inline]
    pub fn transform(self, raw: f64) -> f64 {
        match self {
            Channel::WindDirCos => raw.to_radians().cos(),
            Channel::WindDirSin => raw.to_radians().sin(),
            _ => raw,
        }
    }
}

pub const AGGREGATE_NAMES: [&str; N_AGGREGATES] = ["max", "min", "mean"];

/// Day block within a meteorological channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeteoBlock {
    Current = 0,
    Next = 1,
    Diff = 2,
}

/// Offset of pollutant `p`'s hourly value at `hour`.
pub fn pollutant_hour_index(p: usize, hour: usize) -> usize {
    p * HOURS_PER_DAY + hour
}

/// Offset of pollutant `p`'s aggregate `agg` (0 max, 1 min, 2 mean).
pub fn pollutant_aggregate_index(p: usize, agg: usize) -> usize {
    N_POLLUTANTS * HOURS_PER_DAY + p * N_AGGREGATES + agg
}

/// Offset of slot `k` (0..24 hourly, 24..27 aggregates) of a channel block.
pub fn meteo_index(channel: usize, block: MeteoBlock, k: usize) -> usize {
    POLLUTANT_FEATURES + channel * PER_DAY * 3 + block as usize * PER_DAY + k
}

pub fn eight_hour_index(k: usize) -> usize {
    POLLUTANT_FEATURES + METEO_FEATURES + k
}

fn slot_suffix(k: usize) -> String {
    if k < HOURS_PER_DAY {
        format!("h{k:02}")
    } else {
        AGGREGATE_NAMES[k - HOURS_PER_DAY].to_string()
    }
}

/// Builds the descriptor list for a variant, in canonical order.
pub fn base_schema(variant: Variant) -> Vec<FeatureDescriptor> {
    let mut out = Vec::with_capacity(variant.base_len());
    let mut push = |name: String, category: Category| {
        let index = out.len();
        out.push(FeatureDescriptor {
            index,
            name,
            category,
            parents: None,
        });
    };

    for var in Variable::POLLUTANTS {
        for h in 0..HOURS_PER_DAY {
            push(
                format!("cur_{}_h{h:02}", var.column_name()),
                Category::PollutantHourly,
            );
        }
    }
    for var in Variable::POLLUTANTS {
        for agg in AGGREGATE_NAMES {
            push(
                format!("cur_{}_{agg}", var.column_name()),
                Category::PollutantAggregate,
            );
        }
    }
    for ch in Channel::ALL {
        for (prefix, is_diff) in [("cur", false), ("next", false), ("diff", true)] {
            for k in 0..PER_DAY {
                let category = if is_diff {
                    Category::MeteoDiff
                } else if k < HOURS_PER_DAY {
                    Category::MeteoHourly
                } else {
                    Category::MeteoAggregate
                };
                push(format!("{prefix}_{}_{}", ch.name(), slot_suffix(k)), category);
            }
        }
    }
    if variant == Variant::Max8h {
        for h in 0..N_WINDOWS {
            push(format!("cur_o3_8h_s{h:02}"), Category::EightHourMean);
        }
        for agg in AGGREGATE_NAMES {
            push(format!("cur_o3_8h_{agg}"), Category::EightHourMean);
        }
    }
    debug_assert_eq!(out.len(), variant.base_len());
    out
}
