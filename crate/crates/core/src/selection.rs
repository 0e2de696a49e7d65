//! λ grids, k-fold cross-validation and the λ selection rules.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{subset, Columns, RowSubset};
use crate::error::{Error, Result};
use crate::solvers::{lambda_max, RidgeSystem, Intercept, LassoConfig, LassoProblem, ModelFit};

pub const DEFAULT_GRID_POINTS: usize = 100;
pub const DEFAULT_GRID_RATIO: f64 = 1e-4;
pub const DEFAULT_FOLDS: usize = 5;

/// `n` log-spaced values from `hi` down to `lo`; the endpoints are exact.
pub fn log_grid(hi: f64, lo: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![hi],
        _ => {
            let (a, b) = (hi.ln(), lo.ln());
            (0..n)
                .map(|k| match k {
                    0 => hi,
                    k if k == n - 1 => lo,
                    k => (a + (b - a) * k as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

/// Descending Lasso grid from λ_max to `ratio · λ_max`.
pub fn make_lambda_grid<C: Columns + ?Sized>(
    x: &C,
    y: &[f64],
    n_points: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    if n_points == 0 {
        return Err(Error::InvalidArgument("grid needs at least one point".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidArgument(format!("grid ratio must be in (0, 1), got {ratio}")));
    }
    let top = lambda_max(x, y);
    if !(top > 0.0 && top.is_finite()) {
        return Err(Error::DegenerateTarget);
    }
    Ok(log_grid(top, top * ratio, n_points))
}

/// Descending ridge grid. The ridge penalty has no natural top of path, so
/// the grid spans a fixed range in standardized units.
pub fn ridge_grid(n_points: usize) -> Vec<f64> {
    log_grid(1e3, 1e-4, n_points)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldMode {
    /// Seeded uniform permutation, row `perm[i]` in fold `i mod k`.
    #[default]
    Random,
    /// Contiguous chronological chunks.
    Blocked,
}

impl std::str::FromStr for FoldMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(FoldMode::Random),
            "blocked" => Ok(FoldMode::Blocked),
            other => Err(Error::Config(format!("unknown fold mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    #[default]
    Min,
    OneSe,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CvSolver {
    Lasso(LassoConfig),
    Ridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    /// Descending.
    pub grid: Vec<f64>,
    /// Mean over folds of the held-out mean squared error.
    pub cv_mean: Vec<f64>,
    /// Sample standard deviation of the fold errors over √k.
    pub cv_se: Vec<f64>,
    /// Nonzero coefficients of the full-data fit at each λ.
    pub nonzero: Vec<usize>,
    pub lambda_min: f64,
    pub lambda_1se: f64,
    pub fold_assignment: Vec<usize>,
    pub k: usize,
    pub seed: u64,
    pub fold_mode: FoldMode,
    /// Fold and full-data path fits that hit the sweep limit.
    pub unconverged_fits: usize,
}

impl CvResult {
    pub fn index_of(&self, lambda: f64) -> Option<usize> {
        self.grid.iter().position(|&g| g == lambda)
    }

    /// Comma-separated per-λ table with a header row.
    pub fn to_table(&self) -> String {
        let mut s = String::from("lambda,cv_mean,cv_se,nonzero\n");
        for i in 0..self.grid.len() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                self.grid[i], self.cv_mean[i], self.cv_se[i], self.nonzero[i]
            ));
        }
        s
    }
}

pub fn assign_folds(n: usize, k: usize, seed: u64, mode: FoldMode) -> Vec<usize> {
    match mode {
        FoldMode::Random => {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut fold = vec![0; n];
            for (i, &row) in perm.iter().enumerate() {
                fold[row] = i % k;
            }
            fold
        }
        FoldMode::Blocked => (0..n).map(|i| i * k / n).collect(),
    }
}

/// Indices (minimum, one-SE) into a descending grid. Both scan from the
/// large-λ end and take the first qualifying point.
pub fn selection_indices(cv_mean: &[f64], cv_se: &[f64]) -> (usize, usize) {
    let mut i_min = 0;
    for (i, &m) in cv_mean.iter().enumerate() {
        if m < cv_mean[i_min] {
            i_min = i;
        }
    }
    let band = cv_mean[i_min] + cv_se[i_min];
    let i_1se = cv_mean
        .iter()
        .position(|&m| m <= band)
        .unwrap_or(i_min)
        .min(i_min);
    (i_min, i_1se)
}

pub fn select_lambda(cv: &CvResult, rule: SelectionRule) -> f64 {
    match rule {
        SelectionRule::Min => cv.lambda_min,
        SelectionRule::OneSe => cv.lambda_1se,
    }
}

fn held_out_errors<C: Columns + ?Sized>(
    x: &C,
    test_rows: &[usize],
    y_test: &[f64],
    fit: &ModelFit,
) -> f64 {
    let mut pred = vec![fit.beta0; test_rows.len()];
    let mut col = Vec::new();
    for &j in &fit.active_set {
        x.column_rows(j, test_rows, &mut col);
        let b = fit.beta[j];
        for (p, v) in pred.iter_mut().zip(&col) {
            *p += b * v;
        }
    }
    pred.iter()
        .zip(y_test)
        .map(|(p, y)| (p - y) * (p - y))
        .sum::<f64>()
        / test_rows.len() as f64
}

/// k-fold cross-validation over a descending grid. Fold fits use a
/// fold-local intercept and run concurrently; the result does not depend on
/// scheduling.
pub fn kfold_cv<C: Columns + ?Sized>(
    x: &C,
    y: &[f64],
    k: usize,
    grid: &[f64],
    seed: u64,
    mode: FoldMode,
    solver: CvSolver,
) -> Result<CvResult> {
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::SchemaMismatch(format!(
            "design has {n} rows, response has {}",
            y.len()
        )));
    }
    if k < 2 {
        return Err(Error::InvalidArgument(format!("need k >= 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::InvalidArgument(format!("{n} rows cannot fill {k} folds")));
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("lambda grid must be strictly descending".into()));
    }
    let fold_assignment = assign_folds(n, k, seed, mode);
    let folds: Vec<(Vec<usize>, Vec<usize>)> = (0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..n).partition(|&i| fold_assignment[i] == f);
            (train, test)
        })
        .collect();
    if let Some((train, _)) = folds.iter().find(|(train, _)| train.len() < 2) {
        return Err(Error::InvalidArgument(format!(
            "a fold leaves only {} training row(s)",
            train.len()
        )));
    }

    // The k fold paths and the full-data path (for the nonzero counts) are
    // independent; task k is the full-data one.
    let outputs: Vec<(Vec<f64>, usize)> = (0..=k)
        .into_par_iter()
        .map(|task| {
            let mut values = Vec::with_capacity(grid.len());
            let mut stalled = 0usize;
            if task == k {
                match solver {
                    CvSolver::Lasso(cfg) => {
                        LassoProblem::new(x, y, cfg.intercept)?.path(grid, &cfg, |_, fit| {
                            stalled += usize::from(!fit.converged);
                            values.push(fit.nonzero() as f64);
                        })?
                    }
                    CvSolver::Ridge => {
                        let sys = RidgeSystem::new(x, y, Intercept::ResponseMean)?;
                        for &lambda in grid {
                            values.push(sys.solve(lambda)?.nonzero() as f64);
                        }
                    }
                }
                return Ok((values, stalled));
            }
            let (train, test) = &folds[task];
            let xs = RowSubset::new(x, train.clone());
            let ys = subset(y, train);
            let y_test = subset(y, test);
            match solver {
                CvSolver::Lasso(cfg) => {
                    let cfg = LassoConfig {
                        intercept: Intercept::Centered,
                        ..cfg
                    };
                    let prob = LassoProblem::new(&xs, &ys, Intercept::Centered)?;
                    prob.path(grid, &cfg, |_, fit| {
                        stalled += usize::from(!fit.converged);
                        values.push(held_out_errors(x, test, &y_test, &fit));
                    })?;
                }
                CvSolver::Ridge => {
                    let sys = RidgeSystem::new(&xs, &ys, Intercept::Centered)?;
                    for &lambda in grid {
                        values.push(held_out_errors(x, test, &y_test, &sys.solve(lambda)?));
                    }
                }
            }
            Ok((values, stalled))
        })
        .collect::<Result<_>>()?;
    let unconverged_fits: usize = outputs.iter().map(|(_, s)| s).sum();
    let mut outputs: Vec<Vec<f64>> = outputs.into_iter().map(|(v, _)| v).collect();
    let nonzero: Vec<usize> = outputs.pop().expect("full-data path").into_iter().map(|c| c as usize).collect();
    let fold_errors = outputs;

    let kf = k as f64;
    let mut cv_mean = Vec::with_capacity(grid.len());
    let mut cv_se = Vec::with_capacity(grid.len());
    for g in 0..grid.len() {
        let m = fold_errors.iter().map(|e| e[g]).sum::<f64>() / kf;
        let var = fold_errors.iter().map(|e| (e[g] - m).powi(2)).sum::<f64>() / (kf - 1.0);
        cv_mean.push(m);
        cv_se.push((var / kf).sqrt());
    }

    if unconverged_fits > 0 {
        log::warn!(
            "{unconverged_fits} of {} path fits stopped at the sweep limit",
            (k + 1) * grid.len()
        );
    }

    let (i_min, i_1se) = selection_indices(&cv_mean, &cv_se);
    Ok(CvResult {
        grid: grid.to_vec(),
        lambda_min: grid[i_min],
        lambda_1se: grid[i_1se],
        cv_mean,
        cv_se,
        nonzero,
        fold_assignment,
        k,
        seed,
        fold_mode: mode,
        unconverged_fits,
    })
}
