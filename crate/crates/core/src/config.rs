//! Run configuration: a TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::features::{TargetMode, Variant};
use crate::ingest::{HourlySchema, Variable, DEFAULT_MAX_GAP_HOURS};
use crate::model::Expansion;
use crate::selection::{FoldMode, SelectionRule, DEFAULT_FOLDS, DEFAULT_GRID_POINTS, DEFAULT_GRID_RATIO};
use crate::solvers::{Intercept, LassoConfig, Strategy};

/// A fixed penalty or selection by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Value(f64),
    Cv,
}

impl Serialize for LambdaChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LambdaChoice::Value(v) => s.serialize_f64(*v),
            LambdaChoice::Cv => s.serialize_str("cv"),
        }
    }
}

impl<'de> Deserialize<'de> for LambdaChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Int(i64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(LambdaChoice::Value(v)),
            Raw::Int(v) => Ok(LambdaChoice::Value(v as f64)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl std::str::FromStr for LambdaChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("cv") {
            return Ok(LambdaChoice::Cv);
        }
        s.parse::<f64>()
            .map(LambdaChoice::Value)
            .map_err(|_| Error::Config(format!("lambda must be a number or \"cv\", got {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CvSettings {
    pub k: usize,
    pub n_points: usize,
    pub ratio: f64,
    pub seed: u64,
    pub fold_mode: FoldMode,
    pub rule: SelectionRule,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            k: DEFAULT_FOLDS,
            n_points: DEFAULT_GRID_POINTS,
            ratio: DEFAULT_GRID_RATIO,
            seed: 0,
            fold_mode: FoldMode::Random,
            rule: SelectionRule::Min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_sweeps: usize,
    pub strategy: Strategy,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let d = LassoConfig::default();
        Self {
            tol: d.tol,
            max_sweeps: d.max_sweeps,
            strategy: d.strategy,
        }
    }
}

impl SolverSettings {
    pub fn lasso(&self, lambda: f64) -> LassoConfig {
        LassoConfig {
            lambda,
            tol: self.tol,
            max_sweeps: self.max_sweeps,
            strategy: self.strategy,
            intercept: Intercept::ResponseMean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportSettings {
    /// Include the Lasso fit on the interaction expansion.
    pub polynomial: bool,
    /// Penalty of that fit; `None` reuses the linear choice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polynomial_lambda: Option<LambdaChoice>,
    pub top_k: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self {
            polynomial: true,
            polynomial_lambda: None,
            top_k: 10,
        }
    }
}

fn default_gap() -> usize {
    DEFAULT_MAX_GAP_HOURS
}
fn default_delimiter() -> char {
    ','
}
fn default_budget() -> f64 {
    2048.0
}
fn default_lambda() -> LambdaChoice {
    LambdaChoice::Cv
}
fn default_target_mode() -> TargetMode {
    TargetMode::Delta
}
fn default_variant() -> Variant {
    Variant::Max
}

/// Dates are written as quoted `YYYY-MM-DD` strings. Train and test ranges
/// are inclusive and select rows by the day being forecast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pollutant_file: PathBuf,
    pub meteorology_file: PathBuf,
    /// Next-day meteorology forecasts; observations are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forecast_file: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_variant")]
    pub variant: Variant,
    #[serde(default = "default_target_mode")]
    pub target_mode: TargetMode,
    #[serde(default)]
    pub expansion: Expansion,
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub test_start: NaiveDate,
    pub test_end: NaiveDate,
    #[serde(default = "default_lambda")]
    pub lambda: LambdaChoice,
    #[serde(default = "default_gap")]
    pub max_gap_hours: usize,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default)]
    pub missing_sentinels: Vec<String>,
    /// Input header name per canonical variable name, where they differ.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub column_names: BTreeMap<String, String>,
    /// Working-set size above which the polynomial run warns, in MiB.
    #[serde(default = "default_budget")]
    pub memory_budget_mb: f64,
    #[serde(default)]
    pub cv: CvSettings,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub report: ReportSettings,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub variant: Option<Variant>,
    pub expansion: Option<Expansion>,
    pub lambda: Option<LambdaChoice>,
    pub folds: Option<FoldsOverride>,
    pub output_dir: Option<PathBuf>,
}

/// `--folds` takes a fold count or a fold mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FoldsOverride {
    Count(usize),
    Mode(FoldMode),
}

impl std::str::FromStr for FoldsOverride {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.parse::<usize>() {
            Ok(k) => Ok(FoldsOverride::Count(k)),
            Err(_) => s.parse().map(FoldsOverride::Mode),
        }
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "max" => Ok(Variant::Max),
        "max8h" => Ok(Variant::Max8h),
        other => Err(Error::Config(format!("unknown variant {other:?}"))),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.cv.seed = s;
        }
        if let Some(v) = o.variant {
            self.variant = v;
        }
        if let Some(e) = o.expansion {
            self.expansion = e;
        }
        if let Some(l) = o.lambda {
            self.lambda = l;
        }
        match o.folds {
            Some(FoldsOverride::Count(k)) => self.cv.k = k,
            Some(FoldsOverride::Mode(m)) => self.cv.fold_mode = m,
            None => {}
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.train_start > self.train_end {
            return bad(format!("train range {}..{} is empty", self.train_start, self.train_end));
        }
        if self.test_start > self.test_end {
            return bad(format!("test range {}..{} is empty", self.test_start, self.test_end));
        }
        if self.train_start <= self.test_end && self.test_start <= self.train_end {
            return bad("train and test date ranges overlap".into());
        }
        if self.cv.fold_mode == FoldMode::Blocked && self.test_start <= self.train_end {
            return bad("blocked folds require the test range to follow the train range".into());
        }
        if self.cv.k < 2 {
            return bad(format!("cv.k must be >= 2, got {}", self.cv.k));
        }
        if self.cv.n_points == 0 {
            return bad("cv.n_points must be >= 1".into());
        }
        if !(self.cv.ratio > 0.0 && self.cv.ratio < 1.0) {
            return bad(format!("cv.ratio must be in (0, 1), got {}", self.cv.ratio));
        }
        if !(self.solver.tol > 0.0) || self.solver.max_sweeps == 0 {
            return bad("solver.tol must be > 0 and solver.max_sweeps >= 1".into());
        }
        for l in [Some(self.lambda), self.report.polynomial_lambda].into_iter().flatten() {
            if let LambdaChoice::Value(v) = l {
                if !(v >= 0.0 && v.is_finite()) {
                    return bad(format!("lambda must be finite and >= 0, got {v}"));
                }
            }
        }
        if !self.delimiter.is_ascii() {
            return bad("delimiter must be a single ASCII character".into());
        }
        for name in self.column_names.keys() {
            if Variable::from_column_name(name).is_none() {
                return bad(format!("unknown variable {name:?} in column_names"));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self, name: &str) -> PathBuf {
        self.resolve(&self.output_dir).join(name)
    }

    fn schema(&self, base: HourlySchema) -> HourlySchema {
        let mut s = base;
        s.delimiter = self.delimiter as u8;
        s.sentinels = self.missing_sentinels.clone();
        for (var, header) in s.columns.iter_mut() {
            if let Some(h) = self.column_names.get(var.column_name()) {
                *header = h.clone();
            }
        }
        s
    }

    pub fn pollutant_schema(&self) -> HourlySchema {
        self.schema(HourlySchema::pollutants())
    }

    pub fn meteorology_schema(&self) -> HourlySchema {
        self.schema(HourlySchema::meteorology())
    }

    pub fn in_train(&self, target_date: NaiveDate) -> bool {
        (self.train_start..=self.train_end).contains(&target_date)
    }

    pub fn in_test(&self, target_date: NaiveDate) -> bool {
        (self.test_start..=self.test_end).contains(&target_date)
    }
}
