//! Training-set standardization (population variance, divisor n).

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::rows::{delta_target, DailyFeatureRow, TargetMode};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// A column whose spread is below this fraction of its magnitude is treated
/// as constant.
const ZERO_VARIANCE_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizationParams {
    /// Per raw feature, including dropped ones.
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Raw feature indices kept, ascending. Design column `j` is raw feature
    /// `retained[j]`.
    pub retained: Vec<usize>,
    /// Zero-variance raw features.
    pub dropped: Vec<usize>,
    pub y_mu: f64,
    pub y_sigma: f64,
}

/// Two-pass population mean and standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub(crate) fn is_constant(mean: f64, sd: f64) -> bool {
    sd <= ZERO_VARIANCE_RTOL * mean.abs().max(1.0)
}

impl StandardizationParams {
    pub fn fit(x: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        if x.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "standardization needs at least 2 training rows, got {}",
                x.len()
            )));
        }
        if y.len() != x.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} feature rows but {} targets",
                x.len(),
                y.len()
            )));
        }
        let p = x[0].len();
        if let Some(bad) = x.iter().find(|r| r.len() != p) {
            return Err(Error::SchemaMismatch(format!(
                "ragged feature rows: {} vs {}",
                bad.len(),
                p
            )));
        }
        let mut mu = Vec::with_capacity(p);
        let mut sigma = Vec::with_capacity(p);
        let mut retained = Vec::new();
        let mut dropped = Vec::new();
        let mut col = vec![0.0; x.len()];
        for j in 0..p {
            for (c, row) in col.iter_mut().zip(x) {
                *c = row[j];
            }
            let (m, s) = mean_std(&col);
            mu.push(m);
            sigma.push(s);
            if is_constant(m, s) {
                dropped.push(j);
            } else {
                retained.push(j);
            }
        }
        if retained.is_empty() {
            return Err(Error::Config(
                "every feature column has zero variance on the training rows".into(),
            ));
        }
        if !dropped.is_empty() {
            log::info!("dropped {} zero-variance feature column(s)", dropped.len());
        }
        let (y_mu, y_sigma) = mean_std(y);
        if is_constant(y_mu, y_sigma) {
            return Err(Error::DegenerateTarget);
        }
        Ok(Self {
            mu,
            sigma,
            retained,
            dropped,
            y_mu,
            y_sigma,
        })
    }

    pub fn n_raw(&self) -> usize {
        self.mu.len()
    }

    pub fn n_retained(&self) -> usize {
        self.retained.len()
    }

    /// Standardizes one raw feature vector onto the retained columns.
    pub fn standardize_x(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mu.len() {
            return Err(Error::SchemaMismatch(format!(
                "feature vector has length {}, model expects {}",
                x.len(),
                self.mu.len()
            )));
        }
        Ok(self
            .retained
            .iter()
            .map(|&j| (x[j] - self.mu[j]) / self.sigma[j])
            .collect())
    }

    pub fn standardize_y(&self, y: f64) -> f64 {
        (y - self.y_mu) / self.y_sigma
    }

    pub fn destandardize_y(&self, z: f64) -> f64 {
        self.y_mu + self.y_sigma * z
    }

    pub fn apply(&self, x: &[Vec<f64>], y: &[f64]) -> Result<(DesignMatrix, Vec<f64>)> {
        let n = x.len();
        let mut m = DesignMatrix::zeros(n, self.retained.len());
        for (i, row) in x.iter().enumerate() {
            if row.len() != self.mu.len() {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} has length {}, expected {}",
                    row.len(),
                    self.mu.len()
                )));
            }
        }
        for (jj, &j) in self.retained.iter().enumerate() {
            let (mu, sd) = (self.mu[j], self.sigma[j]);
            for (dst, row) in m.col_mut(jj).iter_mut().zip(x) {
                *dst = (row[j] - mu) / sd;
            }
        }
        let ys = y.iter().map(|&v| self.standardize_y(v)).collect();
        Ok((m, ys))
    }

    /// SHA-256 over the exact bit patterns of every parameter.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for v in self.mu.iter().chain(&self.sigma) {
            h.update(v.to_bits().to_le_bytes());
        }
        for &j in self.retained.iter().chain(&self.dropped) {
            h.update((j as u64).to_le_bytes());
        }
        h.update(self.y_mu.to_bits().to_le_bytes());
        h.update(self.y_sigma.to_bits().to_le_bytes());
        hex::encode(h.finalize())
    }
}

pub fn fit_standardizer(rows: &[DailyFeatureRow], mode: TargetMode) -> Result<StandardizationParams> {
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.x.clone()).collect();
    let y: Vec<f64> = rows.iter().map(|r| delta_target(r, mode)).collect();
    StandardizationParams::fit(&x, &y)
}

pub fn apply_standardizer(
    params: &StandardizationParams,
    rows: &[DailyFeatureRow],
    mode: TargetMode,
) -> Result<(DesignMatrix, Vec<f64>)> {
    let x: Vec<Vec<f64>> = rows.iter().map(|r| r.x.clone()).collect();
    let y: Vec<f64> = rows.iter().map(|r| delta_target(r, mode)).collect();
    params.apply(&x, &y)
}
