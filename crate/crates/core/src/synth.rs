//! Seeded synthetic station data with a planted sparse next-day relation.
//!
//! Weather and the non-ozone pollutants are generated day by day with
//! diurnal cycles and hourly noise. Ozone is generated sequentially: the
//! maximum of day `d+1` is exactly
//!
//! ```text
//! T(d+1) = c + Σ_k w_k · x_{s_k}(d) + ε(d),   ε ~ N(0, σ²)
//! ```
//!
//! where `x(d)` is the base feature vector of the pair `(d, d+1)`. The
//! current-day maximum ozone is always part of the support, so the relation
//! keeps the same support under the delta target. Values are written with
//! shortest round-trip formatting so features rebuilt from the files equal
//! the generator's features bit for bit.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Days, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::rows::Hourly;
use crate::features::schema::{
    meteo_index, pollutant_aggregate_index, pollutant_hour_index, MeteoBlock, N_CHANNELS,
    N_POLLUTANTS,
};
use crate::features::{base_schema, feature_vector, Variant};
use crate::features::schema::Channel;
use crate::ingest::{write_canonical, HourlyRecord, Variable, HOURS_PER_DAY};

/// Base-feature index of the current-day maximum ozone.
pub const CURRENT_O3_MAX: usize = 168;
/// Autoregressive weight on [`CURRENT_O3_MAX`].
const O3_PERSISTENCE: f64 = 0.5;
const O3_LEVEL: f64 = 22.0;

/// Planting order: the first `sparsity` entries are used. The current-day
/// ozone maximum comes first; the others carry a target contribution of
/// the given size in standard deviations of the feature.
fn candidate_support() -> Vec<(usize, f64)> {
    let t = Channel::Temperature as usize;
    let rh = Channel::RelHumidity as usize;
    let ws = Channel::WindSpeed as usize;
    let pr = Channel::Pressure as usize;
    vec![
        (CURRENT_O3_MAX, f64::NAN),
        (meteo_index(t, MeteoBlock::Next, 24), 6.0),
        (meteo_index(rh, MeteoBlock::Next, 25), -5.0),
        (pollutant_hour_index(3, 23), 4.0),
        (meteo_index(t, MeteoBlock::Next, 6), 3.5),
        (meteo_index(ws, MeteoBlock::Next, 26), -3.0),
        (pollutant_aggregate_index(5, 2), 2.5),
        (meteo_index(pr, MeteoBlock::Diff, 26), 2.0),
    ]
}

pub const MAX_SPARSITY: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_days: usize,
    pub seed: u64,
    /// Number of planted features, 1..=8.
    pub sparsity: usize,
    /// Variance ratio of planted signal to noise; `f64::INFINITY` for none.
    pub snr: f64,
    pub start: NaiveDate,
    /// Fraction of forecast days assigned to training in the emitted config.
    pub train_fraction: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_days: 365,
            seed: 0,
            sparsity: 5,
            snr: 20.0,
            start: NaiveDate::from_ymd_opt(2016, 1, 1).expect("valid date"),
            train_fraction: 0.75,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_days < 10 {
            return Err(Error::InvalidArgument(format!(
                "synthetic data needs at least 10 days, got {}",
                self.n_days
            )));
        }
        if !(1..=MAX_SPARSITY).contains(&self.sparsity) {
            return Err(Error::InvalidArgument(format!(
                "sparsity must be in 1..={MAX_SPARSITY}, got {}",
                self.sparsity
            )));
        }
        if !(self.snr > 0.0) {
            return Err(Error::InvalidArgument(format!("snr must be > 0, got {}", self.snr)));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument("train_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTerm {
    pub index: usize,
    pub name: String,
    /// ppb per raw feature unit.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthManifest {
    pub seed: u64,
    pub n_days: usize,
    pub start: NaiveDate,
    pub variant: Variant,
    pub intercept: f64,
    pub support: Vec<TruthTerm>,
    /// `None` when noise-free.
    pub snr: Option<f64>,
    pub signal_sd: f64,
    pub noise_sd: f64,
}

impl TruthManifest {
    pub fn support_indices(&self) -> Vec<usize> {
        self.support.iter().map(|t| t.index).collect()
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub pollutants: Vec<HourlyRecord>,
    pub meteorology: Vec<HourlyRecord>,
    pub truth: TruthManifest,
}

struct Exogenous {
    pollutants: Vec<[Hourly; N_POLLUTANTS]>,
    meteo: Vec<[Hourly; 7]>,
}

fn gauss(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    Normal::new(0.0, sd).expect("finite sd").sample(rng)
}

fn diurnal(h: usize, peak: f64) -> f64 {
    (2.0 * PI * (h as f64 - peak + 6.0) / 24.0).sin()
}

/// Stationary AR(1) noise over the hours of one day.
fn hourly_noise(rng: &mut ChaCha8Rng, sd: f64, phi: f64) -> Hourly {
    let mut out = [0.0; HOURS_PER_DAY];
    let innovation = sd * (1.0 - phi * phi).sqrt();
    let mut e = gauss(rng, sd);
    for v in out.iter_mut() {
        *v = e;
        e = phi * e + gauss(rng, innovation);
    }
    out
}

fn exogenous(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Exogenous {
    let mut pollutants = Vec::with_capacity(spec.n_days);
    let mut meteo = Vec::with_capacity(spec.n_days);
    let (mut t_anom, mut p_anom) = (0.0, 0.0);
    for d in 0..spec.n_days {
        let date = spec.start + Days::new(d as u64);
        let doy = f64::from(chrono::Datelike::ordinal(&date));
        let season = (2.0 * PI * (doy - 105.0) / 365.25).sin();
        t_anom = 0.6 * t_anom + gauss(rng, 2.5);
        p_anom = 0.7 * p_anom + gauss(rng, 0.6);
        let t_base = 10.0 + 8.0 * season + t_anom;
        let t_amp = 3.0 + 6.0 * rng.random::<f64>();
        let spread = 2.0 + 8.0 * rng.random::<f64>();
        let wind_dir = 360.0 * rng.random::<f64>();
        let wind = 6.0 + 10.0 * rng.random::<f64>();
        let vis = 12.0 + 20.0 * rng.random::<f64>();
        let no2 = 8.0 + 14.0 * rng.random::<f64>();
        let no = 2.0 + 8.0 * rng.random::<f64>();
        let so2 = 0.5 + 3.0 * rng.random::<f64>();
        let co = 0.15 + 0.4 * rng.random::<f64>();
        let pm = 3.0 + 15.0 * rng.random::<f64>();

        let t_noise = hourly_noise(rng, 3.0, 0.5);
        let dew_noise = hourly_noise(rng, 2.0, 0.5);
        let wind_noise = hourly_noise(rng, 3.0, 0.5);
        let no2_noise = hourly_noise(rng, 5.0, 0.4);
        let mut m = [[0.0; HOURS_PER_DAY]; 7];
        let mut p = [[0.0; HOURS_PER_DAY]; N_POLLUTANTS];
        for h in 0..HOURS_PER_DAY {
            let temp = t_base + t_amp * diurnal(h, 15.0) + t_noise[h];
            let dew = (t_base - spread + 0.3 * t_amp * diurnal(h, 15.0) + dew_noise[h]).min(temp);
            let sat = |t: f64| (17.625 * t / (243.04 + t)).exp();
            let rh = (100.0 * sat(dew) / sat(temp)).clamp(1.0, 100.0);
            m[0][h] = temp;
            m[1][h] = dew;
            m[2][h] = rh;
            m[3][h] = (wind_dir + gauss(rng, 25.0)).rem_euclid(360.0);
            m[4][h] = (wind + 3.0 * diurnal(h, 14.0) + wind_noise[h]).max(0.0);
            m[5][h] = (vis + gauss(rng, 3.0)).max(0.2);
            m[6][h] = 101.3 + p_anom + gauss(rng, 0.05);

            let rush = (-((h as f64 - 8.0) / 2.0).powi(2)).exp()
                + (-((h as f64 - 19.0) / 2.5).powi(2)).exp();
            let no2_h = (no2 * (0.6 + 0.8 * rush) + no2_noise[h]).max(0.1);
            let no_h = (no * (0.4 + 1.2 * rush) + gauss(rng, 1.0)).max(0.1);
            p[1][h] = (so2 + gauss(rng, 0.4)).max(0.05);
            p[2][h] = no_h;
            p[3][h] = no2_h;
            p[4][h] = no_h + no2_h + gauss(rng, 0.5).abs();
            p[5][h] = (co * (0.8 + 0.4 * rush) + gauss(rng, 0.03)).max(0.01);
            p[6][h] = (pm + gauss(rng, 2.0)).max(0.1);
        }
        pollutants.push(p);
        meteo.push(m);
    }
    Exogenous { pollutants, meteo }
}

/// Raw meteorology readings mapped onto the nine feature channels.
fn channels(raw: &[Hourly; 7]) -> [Hourly; N_CHANNELS] {
    let mut out = [[0.0; HOURS_PER_DAY]; N_CHANNELS];
    for (o, ch) in out.iter_mut().zip(Channel::ALL) {
        let src = &raw[ch.source().index() - 7];
        for (v, r) in o.iter_mut().zip(src) {
            *v = ch.transform(*r);
        }
    }
    out
}

/// Hourly ozone whose maximum is exactly `peak_value`. The depth of the
/// diurnal cycle varies from day to day and every off-peak hour carries its
/// own noise.
fn ozone_day(peak_value: f64, rng: &mut ChaCha8Rng) -> Hourly {
    let peak = rng.random_range(13..=17);
    let depth = 8.0 + 20.0 * rng.random::<f64>();
    let mut o = [0.0; HOURS_PER_DAY];
    for (h, v) in o.iter_mut().enumerate() {
        *v = if h == peak {
            peak_value
        } else {
            let shape = (-((h as f64 - peak as f64) / 5.0).powi(2)).exp();
            peak_value - (depth * (1.0 - shape) + 0.5 + gauss(rng, 4.0).abs())
        };
    }
    o
}

/// Runs the ozone recursion. Returns the daily ozone series and the
/// planted signal `Σ w x` per forecast day.
fn ozone(
    exo: &Exogenous,
    support: &[(usize, f64)],
    intercept: f64,
    noise: &[f64],
    rng: &mut ChaCha8Rng,
) -> (Vec<Hourly>, Vec<f64>) {
    let n = exo.meteo.len();
    let mut o3 = Vec::with_capacity(n);
    o3.push(ozone_day(intercept / (1.0 - O3_PERSISTENCE), rng));
    let mut signal = Vec::with_capacity(n - 1);
    for d in 0..n - 1 {
        let mut cur = exo.pollutants[d];
        cur[0] = o3[d];
        let x = feature_vector(&cur, &channels(&exo.meteo[d]), &channels(&exo.meteo[d + 1]), Variant::Max);
        let s: f64 = support.iter().map(|&(j, w)| w * x[j]).sum();
        signal.push(s);
        o3.push(ozone_day(intercept + s + noise[d], rng));
    }
    (o3, signal)
}

fn sd(v: &[f64]) -> f64 {
    crate::features::standardize::mean_std(v).1
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let exo = exogenous(spec, &mut rng);
    let n = spec.n_days;

    // Raw weights from the requested standardized contributions, using the
    // spread of each (exogenous) feature over the generated days.
    let planted = &candidate_support()[..spec.sparsity];
    let mut support = Vec::with_capacity(planted.len());
    for &(j, size) in planted {
        if j == CURRENT_O3_MAX {
            support.push((j, O3_PERSISTENCE));
            continue;
        }
        let xs: Vec<f64> = (0..n - 1)
            .map(|d| {
                feature_vector(
                    &exo.pollutants[d],
                    &channels(&exo.meteo[d]),
                    &channels(&exo.meteo[d + 1]),
                    Variant::Max,
                )[j]
            })
            .collect();
        support.push((j, size / sd(&xs)));
    }
    let intercept = O3_LEVEL * (1.0 - O3_PERSISTENCE);
    // Pilot run without noise fixes the noise level for the requested SNR.
    let mut pilot_rng = rng.clone();
    let (_, pilot_signal) = ozone(&exo, &support, intercept, &vec![0.0; n - 1], &mut pilot_rng);
    let signal_sd = sd(&pilot_signal);
    let noise_sd = if spec.snr.is_infinite() { 0.0 } else { signal_sd / spec.snr.sqrt() };
    let noise: Vec<f64> = (0..n - 1)
        .map(|_| if noise_sd > 0.0 { gauss(&mut rng, noise_sd) } else { 0.0 })
        .collect();
    let (o3, _) = ozone(&exo, &support, intercept, &noise, &mut rng);

    let mut pollutants = Vec::with_capacity(n * HOURS_PER_DAY);
    let mut meteorology = Vec::with_capacity(n * HOURS_PER_DAY);
    for d in 0..n {
        let date = spec.start + Days::new(d as u64);
        for h in 0..HOURS_PER_DAY {
            let mut p = HourlyRecord::empty(date, h as u8);
            p.set(Variable::O3, Some(o3[d][h]));
            for (k, var) in Variable::POLLUTANTS.iter().enumerate().skip(1) {
                p.set(*var, Some(exo.pollutants[d][k][h]));
            }
            pollutants.push(p);
            let mut m = HourlyRecord::empty(date, h as u8);
            for (k, var) in Variable::METEOROLOGY.iter().enumerate() {
                m.set(*var, Some(exo.meteo[d][k][h]));
            }
            meteorology.push(m);
        }
    }

    let schema = base_schema(Variant::Max);
    let truth = TruthManifest {
        seed: spec.seed,
        n_days: n,
        start: spec.start,
        variant: Variant::Max,
        intercept,
        support: support
            .iter()
            .map(|&(j, w)| TruthTerm {
                index: j,
                name: schema[j].name.clone(),
                weight: w,
            })
            .collect(),
        snr: spec.snr.is_finite().then_some(spec.snr),
        signal_sd,
        noise_sd,
    };
    Ok(SynthData {
        pollutants,
        meteorology,
        truth,
    })
}

fn csv_of(records: &[HourlyRecord], vars: &[Variable]) -> Result<String> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header = vec!["date".to_string(), "hour".to_string()];
        header.extend(vars.iter().map(|v| v.column_name().to_string()));
        w.write_record(&header)?;
        for r in records {
            let mut row = vec![r.date.format("%Y-%m-%d").to_string(), r.hour.to_string()];
            row.extend(vars.iter().map(|v| r.get(*v).map_or_else(String::new, |x| x.to_string())));
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::io("<memory>", e))?;
    }
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

impl SynthData {
    pub fn pollutant_csv(&self) -> Result<String> {
        csv_of(&self.pollutants, &Variable::POLLUTANTS)
    }

    pub fn meteorology_csv(&self) -> Result<String> {
        csv_of(&self.meteorology, &Variable::METEOROLOGY)
    }

    /// Both sources merged in the canonical column order.
    pub fn canonical_csv(&self) -> Result<String> {
        let merged = crate::ingest::merge_sources(&[self.pollutants.clone(), self.meteorology.clone()]);
        let mut buf = Vec::new();
        write_canonical(&mut buf, &merged)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// A run config over the generated files: the first `train_fraction` of
    /// forecast days for training, the rest for testing.
    pub fn config_toml(&self, spec: &SynthSpec) -> String {
        let n_targets = spec.n_days - 1;
        let n_train = ((n_targets as f64) * spec.train_fraction).round().clamp(2.0, (n_targets - 2) as f64) as u64;
        let first = spec.start + Days::new(1);
        let train_end = spec.start + Days::new(n_train);
        let test_start = train_end + Days::new(1);
        let last = spec.start + Days::new(n_targets as u64);
        format!(
            "pollutant_file = \"pollutants.csv\"\n\
             meteorology_file = \"meteorology.csv\"\n\
             output_dir = \"out\"\n\
             variant = \"max\"\n\
             target_mode = \"delta\"\n\
             expansion = \"linear\"\n\
             train_start = \"{first}\"\n\
             train_end = \"{train_end}\"\n\
             test_start = \"{test_start}\"\n\
             test_end = \"{last}\"\n\
             lambda = \"cv\"\n\
             \n\
             [cv]\n\
             seed = {}\n",
            spec.seed
        )
    }
}

pub const POLLUTANT_FILE: &str = "pollutants.csv";
pub const METEOROLOGY_FILE: &str = "meteorology.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "config.toml";

/// Writes the two hourly files, the truth manifest and a ready config.
pub fn write_synthetic(spec: &SynthSpec, dir: &Path) -> Result<TruthManifest> {
    let data = generate(spec)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    crate::pipeline::write_atomic(&dir.join(POLLUTANT_FILE), data.pollutant_csv()?.as_bytes())?;
    crate::pipeline::write_atomic(&dir.join(METEOROLOGY_FILE), data.meteorology_csv()?.as_bytes())?;
    let mut truth = serde_json::to_string_pretty(&data.truth)?;
    truth.push('\n');
    crate::pipeline::write_atomic(&dir.join(TRUTH_FILE), truth.as_bytes())?;
    crate::pipeline::write_atomic(&dir.join(CONFIG_FILE), data.config_toml(spec).as_bytes())?;
    Ok(data.truth)
}
