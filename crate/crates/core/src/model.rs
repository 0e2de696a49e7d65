//! Persisted model files (versioned JSON) and prediction from them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::expand::{restandardize, term_of};
use crate::features::{reanchor, FeatureDescriptor, StandardizationParams, TargetMode, Variant};
use crate::solvers::{KktCertificate, Method, ModelFit, LAMBDA_CONVENTION};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expansion {
    #[default]
    Linear,
    /// Linear terms, squares and all pairwise products of the base features.
    Polynomial,
}

impl std::str::FromStr for Expansion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Expansion::Linear),
            "polynomial" => Ok(Expansion::Polynomial),
            other => Err(Error::Config(format!("unknown expansion {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    /// Column of the fitted design.
    pub index: usize,
    pub name: String,
    pub weight: f64,
    /// Base columns of an expanded term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parents: Option<[usize; 2]>,
    /// Re-standardization of an expanded term.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion_mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion_sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedColumn {
    pub index: usize,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub method: Method,
    pub lambda: f64,
    pub lambda_convention: String,
    pub variant: Variant,
    pub target_mode: TargetMode,
    pub expansion: Expansion,
    /// Standardized-response intercept.
    pub beta0: f64,
    /// Width of the fitted design.
    pub n_candidates: usize,
    pub terms: Vec<ModelTerm>,
    pub converged: bool,
    pub sweeps_used: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kkt: Option<KktCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_estimate: Option<f64>,
    pub dropped_columns: Vec<DroppedColumn>,
    pub standardization_digest: String,
    pub standardization: StandardizationParams,
}

/// Everything about the fitted design a model file needs beyond the fit.
pub struct DesignInfo<'a> {
    pub variant: Variant,
    pub target_mode: TargetMode,
    pub expansion: Expansion,
    /// Raw base schema (before dropping constant columns).
    pub base_schema: &'a [FeatureDescriptor],
    pub params: &'a StandardizationParams,
    /// Descriptor and re-standardization `(mu, sigma)` of a fitted column.
    pub column: &'a dyn Fn(usize) -> (FeatureDescriptor, Option<(f64, f64)>),
}

impl ModelFile {
    pub fn from_fit(fit: &ModelFit, info: &DesignInfo<'_>) -> Self {
        let terms = fit
            .active_set
            .iter()
            .map(|&j| {
                let (d, stats) = (info.column)(j);
                ModelTerm {
                    index: j,
                    name: d.name,
                    weight: fit.beta[j],
                    parents: d.parents,
                    expansion_mu: stats.map(|s| s.0),
                    expansion_sigma: stats.map(|s| s.1),
                }
            })
            .collect();
        let dropped_columns = info
            .params
            .dropped
            .iter()
            .map(|&j| DroppedColumn {
                index: j,
                name: info.base_schema[j].name.clone(),
            })
            .collect();
        Self {
            schema_version: MODEL_SCHEMA_VERSION,
            method: fit.method,
            lambda: fit.lambda,
            lambda_convention: LAMBDA_CONVENTION.to_string(),
            variant: info.variant,
            target_mode: info.target_mode,
            expansion: info.expansion,
            beta0: fit.beta0,
            n_candidates: fit.beta.len(),
            terms,
            converged: fit.converged,
            sweeps_used: fit.sweeps_used,
            kkt: fit.kkt,
            condition_estimate: fit.condition_estimate,
            dropped_columns,
            standardization_digest: info.params.digest(),
            standardization: info.params.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// Parses and checks the schema version before anything else, then the
    /// standardization digest.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let found = v
            .get("schema_version")
            .and_then(|s| s.as_u64())
            .ok_or_else(|| Error::ModelFile("missing schema_version".into()))?;
        if found != u64::from(MODEL_SCHEMA_VERSION) {
            return Err(Error::SchemaVersion {
                found: found as u32,
                supported: MODEL_SCHEMA_VERSION,
            });
        }
        let m: ModelFile = serde_json::from_value(v)?;
        if m.lambda_convention != LAMBDA_CONVENTION {
            return Err(Error::ModelFile(format!(
                "unsupported lambda convention {:?}",
                m.lambda_convention
            )));
        }
        if m.standardization.digest() != m.standardization_digest {
            return Err(Error::ModelFile("standardization digest mismatch".into()));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn n_active(&self) -> usize {
        self.terms.len()
    }

    /// Model output in standardized response units for one raw base row.
    pub fn predict_standardized(&self, raw: &[f64]) -> Result<f64> {
        let z = self.standardization.standardize_x(raw)?;
        let p0 = z.len();
        let mut out = self.beta0;
        for t in &self.terms {
            let value = match self.expansion {
                Expansion::Linear => *z.get(t.index).ok_or_else(|| {
                    Error::SchemaMismatch(format!("term index {} outside design", t.index))
                })?,
                Expansion::Polynomial => {
                    if t.index >= self.n_candidates {
                        return Err(Error::SchemaMismatch(format!(
                            "term index {} outside design",
                            t.index
                        )));
                    }
                    let (mu, sigma) = t.expansion_mu.zip(t.expansion_sigma).ok_or_else(|| {
                        Error::ModelFile(format!("term {} lacks expansion statistics", t.name))
                    })?;
                    restandardize(term_of(t.index, p0).raw_value(&z), mu, sigma)
                }
            };
            out += t.weight * value;
        }
        Ok(out)
    }

    /// Forecast in ppb of the next-day statistic.
    pub fn predict(&self, raw: &[f64], current_anchor: f64) -> Result<f64> {
        let z = self.predict_standardized(raw)?;
        Ok(reanchor(
            self.standardization.destandardize_y(z),
            current_anchor,
            self.target_mode,
        ))
    }
}
