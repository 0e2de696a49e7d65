//! OLS, ridge and Lasso on a standardized design.
//!
//! # Penalty convention
//!
//! The Lasso objective is the mean-square loss plus an unhalved L1 term,
//!
//! ```text
//! (1/n) ||Y - Xβ||² + λ Σ |β_j|
//! ```
//!
//! so the coordinate update thresholds at `λ/2`, not `λ`. A λ from a
//! package that minimizes `(1/2n)||·||² + λ||β||₁` corresponds to `2λ` here.
//! Ridge uses the same loss with `λ Σ β_j²`, giving
//! `β = (XᵀX + nλI)⁻¹ XᵀY`.

mod lasso;
mod linear;

use serde::{Deserialize, Serialize};

pub use lasso::{fit_lasso, lambda_max, LassoConfig, LassoProblem, Strategy};
pub use linear::{cholesky_solve, fit_ols, fit_ridge, fit_ridge_with, RidgeSystem, CONDITION_WARN};

/// Tag identifying the penalty scaling described in the module docs.
pub const LAMBDA_CONVENTION: &str = "mse-l1-halflambda";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ols,
    Ridge,
    Lasso,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ols => "ols",
            Method::Ridge => "ridge",
            Method::Lasso => "lasso",
        }
    }
}

/// How the unpenalized intercept is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Intercept {
    /// β₀ is the mean of the response and the slopes are fitted to the raw
    /// design and response. Exact when the design columns are centered, as
    /// they are after standardization.
    #[default]
    ResponseMean,
    /// Columns and response are centered on the rows being fitted and
    /// β₀ = ȳ − x̄ᵀβ. Used for fits on row subsets (CV folds), whose columns
    /// are not exactly centered.
    Centered,
}

/// First-order optimality summary of a Lasso fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    /// max over zero coordinates of `|X_jᵀr/n| − λ/2`, floored at 0.
    pub max_inactive_excess: f64,
    /// max over nonzero coordinates of `|X_jᵀr/n − (λ/2)·sign(β_j)|`.
    pub max_active_violation: f64,
    pub tol: f64,
}

impl KktCertificate {
    pub fn holds(&self) -> bool {
        self.max_inactive_excess <= self.tol && self.max_active_violation <= self.tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub method: Method,
    pub lambda: f64,
    /// Intercept, response units of the fitted data.
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// `{ j : beta[j] != 0 }`, ascending.
    pub active_set: Vec<usize>,
    pub sweeps_used: usize,
    pub converged: bool,
    /// `Y − β₀ − Xβ` on the fitted rows.
    pub residuals: Vec<f64>,
    pub kkt: Option<KktCertificate>,
    /// Cholesky-based condition estimate of the normal matrix (OLS/ridge).
    pub condition_estimate: Option<f64>,
}

impl ModelFit {
    pub fn nonzero(&self) -> usize {
        self.active_set.len()
    }

    pub fn l1_norm(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    /// `β₀ + xᵀβ` for one design row given as a closure over column index.
    pub fn predict_with(&self, value: impl Fn(usize) -> f64) -> f64 {
        self.beta0
            + self
                .active_set
                .iter()
                .map(|&j| self.beta[j] * value(j))
                .sum::<f64>()
    }
}

pub(crate) fn active_set_of(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// `sign(z) · max(|z| − θ, 0)`.
#[inline]
pub fn soft_threshold(z: f64, theta: f64) -> f64 {
    debug_assert!(theta >= 0.0, "negative threshold");
    let mag = z.abs() - theta;
    if mag > 0.0 {
        mag.copysign(z)
    } else {
        0.0
    }
}
