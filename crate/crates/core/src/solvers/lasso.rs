//! Cyclic coordinate descent ("shooting") for the Lasso.
//!
//! Each coordinate update is
//!
//! ```text
//! Z_j  = X_jᵀ(Y − Xβ₋ⱼ)/n = X_jᵀr/n + Σ̂_jj β_j
//! β_j ← soft_threshold(Z_j, λ/2) / Σ̂_jj,   Σ̂_jj = X_jᵀX_j/n
//! ```
//!
//! with the residual `r = Y − Xβ` maintained incrementally. Coordinates are
//! visited in ascending index order; runs are bit-for-bit reproducible
//! whether or not gradients are prefetched in parallel.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{active_set_of, soft_threshold, Intercept, KktCertificate, Method, ModelFit};
use crate::design::Columns;
use crate::error::{Error, Result};

/// Columns whose mean square falls below this carry no information and are
/// never updated.
const INERT_DIAG: f64 = 1e-12;
/// Smallest effective sweep tolerance used while chasing the KKT certificate.
const TOL_FLOOR: f64 = 1e-15;
/// Full sweeps over at least this many columns prefetch gradients in parallel.
const PREFETCH_MIN_COLS: usize = 4096;
const PREFETCH_BLOCK: usize = 512;
/// Largest active set whose Gram matrix is formed for the inner sweeps.
const GRAM_MAX_COLS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Sweep every coordinate until the largest change is below `tol`.
    FullSweep,
    /// Alternate full sweeps with inner sweeps over the nonzero coordinates;
    /// stop when a full verification sweep changes nothing.
    #[default]
    ActiveSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub lambda: f64,
    /// Convergence threshold on the largest |Δβ_j| of a sweep.
    pub tol: f64,
    pub max_sweeps: usize,
    pub strategy: Strategy,
    pub intercept: Intercept,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            lambda: 0.0,
            tol: 1e-7,
            max_sweeps: 10_000,
            strategy: Strategy::ActiveSet,
            intercept: Intercept::ResponseMean,
        }
    }
}

impl LassoConfig {
    pub fn with_lambda(lambda: f64) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    /// The certificate tolerance paired with `tol`.
    pub fn kkt_tol(&self) -> f64 {
        10.0 * self.tol
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_sweeps == 0 {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// `Σ (x_i − shift)·r_i` with four fixed partial sums, combined in a fixed
/// order so the result does not depend on the caller.
#[inline]
fn centered_dot(col: &[f64], shift: f64, r: &[f64]) -> f64 {
    let n = col.len().min(r.len());
    let (col, r) = (&col[..n], &r[..n]);
    let mut acc = [0.0f64; 4];
    let mut xs = col.chunks_exact(4);
    let mut rs = r.chunks_exact(4);
    for (x, ri) in (&mut xs).zip(&mut rs) {
        for k in 0..4 {
            acc[k] += (x[k] - shift) * ri[k];
        }
    }
    let mut tail = 0.0;
    for (x, ri) in xs.remainder().iter().zip(rs.remainder()) {
        tail += (x - shift) * ri;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + tail
}

/// `2 · max_j |X_jᵀY/n|`: the smallest λ whose solution from β = 0 is
/// exactly zero.
pub fn lambda_max<C: Columns + ?Sized>(x: &C, y: &[f64]) -> f64 {
    let n = x.n_rows() as f64;
    let g = (0..x.n_cols())
        .into_par_iter()
        .map_init(Vec::new, |buf, j| (centered_dot(x.column(j, buf), 0.0, y) / n).abs())
        .reduce(|| 0.0, f64::max);
    2.0 * g
}

/// A design and response prepared for repeated Lasso fits (a λ path).
pub struct LassoProblem<'a, C: ?Sized> {
    x: &'a C,
    y: &'a [f64],
    intercept: Intercept,
    shift: Vec<f64>,
    diag: Vec<f64>,
    y_mean: f64,
    y_shift: f64,
}

struct State {
    beta: Vec<f64>,
    r: Vec<f64>,
    sweeps: usize,
    trace: Option<Vec<f64>>,
}

impl<'a, C: Columns + ?Sized> LassoProblem<'a, C> {
    pub fn new(x: &'a C, y: &'a [f64], intercept: Intercept) -> Result<Self> {
        let n = x.n_rows();
        if y.len() != n {
            return Err(Error::SchemaMismatch(format!(
                "design has {n} rows, response has {}",
                y.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty design".into()));
        }
        let nf = n as f64;
        let stats: Vec<(f64, f64)> = (0..x.n_cols())
            .into_par_iter()
            .with_min_len(64)
            .map_init(Vec::new, |buf, j| {
                let col = x.column(j, buf);
                let shift = match intercept {
                    Intercept::ResponseMean => 0.0,
                    Intercept::Centered => col.iter().sum::<f64>() / nf,
                };
                let diag = col.iter().map(|v| (v - shift) * (v - shift)).sum::<f64>() / nf;
                (shift, diag)
            })
            .collect();
        let (shift, diag) = stats.into_iter().unzip();
        let y_mean = y.iter().sum::<f64>() / nf;
        let y_shift = match intercept {
            Intercept::ResponseMean => 0.0,
            Intercept::Centered => y_mean,
        };
        Ok(Self {
            x,
            y,
            intercept,
            shift,
            diag,
            y_mean,
            y_shift,
        })
    }

    pub fn n(&self) -> usize {
        self.x.n_rows()
    }

    pub fn p(&self) -> usize {
        self.x.n_cols()
    }

    /// `Σ̂_jj` as used by the update (centered when the intercept rule is).
    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn fit(&self, cfg: &LassoConfig, warm: Option<&[f64]>) -> Result<ModelFit> {
        self.run(cfg, warm, false).map(|(fit, _)| fit)
    }

    /// Like [`fit`](Self::fit) but also records the objective after every
    /// coordinate update that moved β. Meant for small fixtures.
    pub fn fit_traced(&self, cfg: &LassoConfig, warm: Option<&[f64]>) -> Result<(ModelFit, Vec<f64>)> {
        self.run(cfg, warm, true)
            .map(|(fit, trace)| (fit, trace.unwrap_or_default()))
    }

    /// Fits every λ of `grid` in order, seeding each fit with the previous
    /// solution.
    pub fn path(
        &self,
        grid: &[f64],
        cfg: &LassoConfig,
        mut visit: impl FnMut(usize, ModelFit),
    ) -> Result<()> {
        let mut warm: Option<Vec<f64>> = None;
        for (k, &lambda) in grid.iter().enumerate() {
            let fit = self.fit(&LassoConfig { lambda, ..*cfg }, warm.as_deref())?;
            warm = Some(fit.beta.clone());
            visit(k, fit);
        }
        Ok(())
    }

    /// `X_jᵀr/n` for every column, with the centering of this problem.
    pub fn gradients(&self, r: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        (0..self.p())
            .into_par_iter()
            .with_min_len(64)
            .map_init(Vec::new, |buf, j| {
                centered_dot(self.x.column(j, buf), self.shift[j], r) / n
            })
            .collect()
    }

    /// Objective `(1/n)||r||² + λ||β||₁` at `beta`.
    pub fn objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let r = self.residual_for(beta);
        objective_of(&r, beta, lambda)
    }

    fn residual_for(&self, beta: &[f64]) -> Vec<f64> {
        let mut r: Vec<f64> = self.y.iter().map(|v| v - self.y_shift).collect();
        let mut buf = Vec::new();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                let col = self.x.column(j, &mut buf);
                let s = self.shift[j];
                for (ri, x) in r.iter_mut().zip(col) {
                    *ri -= (x - s) * b;
                }
            }
        }
        r
    }

    fn run(
        &self,
        cfg: &LassoConfig,
        warm: Option<&[f64]>,
        traced: bool,
    ) -> Result<(ModelFit, Option<Vec<f64>>)> {
        cfg.validate()?;
        let p = self.p();
        let beta = match warm {
            Some(w) if w.len() != p => {
                return Err(Error::SchemaMismatch(format!(
                    "warm start has length {}, design has {p} columns",
                    w.len()
                )))
            }
            Some(w) => w
                .iter()
                .zip(&self.diag)
                .map(|(&b, &d)| if d > INERT_DIAG { b } else { 0.0 })
                .collect(),
            None => vec![0.0; p],
        };
        let r = self.residual_for(&beta);
        let mut st = State {
            beta,
            r,
            sweeps: 0,
            trace: traced.then(Vec::new),
        };
        if let Some(t) = st.trace.as_mut() {
            t.push(objective_of(&st.r, &st.beta, cfg.lambda));
        }

        let theta = cfg.lambda / 2.0;
        let kkt_tol = cfg.kkt_tol();
        let mut tol = cfg.tol;
        let mut cache: Option<HashMap<usize, Vec<f64>>> =
            self.x.is_streamed().then(HashMap::new);
        let mut converged = false;
        let mut kkt;

        'outer: loop {
            match cfg.strategy {
                Strategy::FullSweep => {
                    while st.sweeps < cfg.max_sweeps {
                        let change = self.full_sweep(&mut st, theta, cfg.lambda);
                        st.sweeps += 1;
                        if change < tol {
                            break;
                        }
                    }
                }
                Strategy::ActiveSet => {
                    while st.sweeps < cfg.max_sweeps {
                        let before = active_set_of(&st.beta);
                        let change = self.full_sweep(&mut st, theta, cfg.lambda);
                        st.sweeps += 1;
                        let after = active_set_of(&st.beta);
                        if change < tol && before == after {
                            break;
                        }
                        self.active_phase(&after, &mut st, theta, cfg, tol, cache.as_mut());
                    }
                }
            }

            kkt = self.certificate(&st, theta, kkt_tol);
            if kkt.holds() {
                converged = true;
                break 'outer;
            }
            if st.sweeps >= cfg.max_sweeps || tol <= TOL_FLOOR {
                break 'outer;
            }
            tol = (tol / 10.0).max(TOL_FLOOR);
        }

        if !converged {
            log::debug!(
                "lasso did not converge at lambda={} after {} sweeps",
                cfg.lambda,
                st.sweeps
            );
        }

        let beta0 = match self.intercept {
            Intercept::ResponseMean => self.y_mean,
            Intercept::Centered => {
                self.y_mean
                    - st
                        .beta
                        .iter()
                        .zip(&self.shift)
                        .map(|(b, s)| b * s)
                        .sum::<f64>()
            }
        };
        let offset = self.y_mean - self.y_shift;
        let residuals = st.r.iter().map(|v| v - offset).collect();
        let fit = ModelFit {
            method: Method::Lasso,
            lambda: cfg.lambda,
            beta0,
            active_set: active_set_of(&st.beta),
            beta: st.beta,
            sweeps_used: st.sweeps,
            converged,
            residuals,
            kkt: Some(kkt),
            condition_estimate: None,
        };
        Ok((fit, st.trace))
    }

    /// Applies the update for coordinate `j` given its gradient `g = X_jᵀr/n`.
    /// Returns |Δβ_j|.
    #[inline]
    fn update(&self, j: usize, col: &[f64], g: f64, st: &mut State, theta: f64, lambda: f64) -> f64 {
        let d = self.diag[j];
        let old = st.beta[j];
        let z = g + d * old;
        let new = soft_threshold(z, theta) / d;
        let delta = new - old;
        if delta != 0.0 {
            let s = self.shift[j];
            for (ri, x) in st.r.iter_mut().zip(col) {
                *ri -= (x - s) * delta;
            }
            st.beta[j] = new;
            if let Some(t) = st.trace.as_mut() {
                t.push(objective_of(&st.r, &st.beta, lambda));
            }
        }
        delta.abs()
    }

    fn index_sweep(
        &self,
        indices: &[usize],
        st: &mut State,
        theta: f64,
        lambda: f64,
        mut cache: Option<&mut HashMap<usize, Vec<f64>>>,
    ) -> f64 {
        let n = self.n() as f64;
        let mut buf = Vec::new();
        let mut max_change = 0.0f64;
        for &j in indices {
            if self.diag[j] <= INERT_DIAG {
                continue;
            }
            let col: &[f64] = match cache.as_deref_mut() {
                Some(c) => c.entry(j).or_insert_with(|| {
                    let mut v = Vec::new();
                    self.x.column(j, &mut v);
                    v
                }),
                None => self.x.column(j, &mut buf),
            };
            let g = centered_dot(col, self.shift[j], &st.r) / n;
            max_change = max_change.max(self.update(j, col, g, st, theta, lambda));
        }
        max_change
    }

    /// Inner sweeps over `active` until the largest change drops below
    /// `tol`. Gradients of the active coordinates are kept up to date through
    /// their Gram matrix, so a sweep costs O(|A|²) instead of O(|A|·n); the
    /// residual is brought up to date once at the end.
    fn active_phase(
        &self,
        active: &[usize],
        st: &mut State,
        theta: f64,
        cfg: &LassoConfig,
        tol: f64,
        mut cache: Option<&mut HashMap<usize, Vec<f64>>>,
    ) {
        let active: Vec<usize> = active.iter().copied().filter(|&j| self.diag[j] > INERT_DIAG).collect();
        let m = active.len();
        if m == 0 || st.sweeps >= cfg.max_sweeps {
            return;
        }
        if m > GRAM_MAX_COLS {
            while st.sweeps < cfg.max_sweeps {
                let change = self.index_sweep(&active, st, theta, cfg.lambda, cache.as_deref_mut());
                st.sweeps += 1;
                if change < tol {
                    break;
                }
            }
            return;
        }

        let nf = self.n() as f64;
        let mut buf = Vec::new();
        let cols: Vec<Vec<f64>> = active
            .iter()
            .map(|&j| {
                let col: &[f64] = match cache.as_deref_mut() {
                    Some(c) => c.entry(j).or_insert_with(|| {
                        let mut v = Vec::new();
                        self.x.column(j, &mut v);
                        v
                    }),
                    None => self.x.column(j, &mut buf),
                };
                let s = self.shift[j];
                col.iter().map(|x| x - s).collect()
            })
            .collect();
        let gram: Vec<f64> = (0..m)
            .into_par_iter()
            .flat_map_iter(|a| {
                let (cols, active) = (&cols, &active);
                (0..m).map(move |b| {
                    if a == b {
                        self.diag[active[a]]
                    } else {
                        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                        centered_dot(&cols[lo], 0.0, &cols[hi]) / nf
                    }
                })
            })
            .collect();
        let mut g: Vec<f64> = cols.iter().map(|c| centered_dot(c, 0.0, &st.r) / nf).collect();
        let start: Vec<f64> = active.iter().map(|&j| st.beta[j]).collect();
        let r_start = st.trace.is_some().then(|| st.r.clone());

        while st.sweeps < cfg.max_sweeps {
            let mut max_change = 0.0f64;
            for a in 0..m {
                let j = active[a];
                let d = self.diag[j];
                let old = st.beta[j];
                let new = soft_threshold(g[a] + d * old, theta) / d;
                let delta = new - old;
                if delta == 0.0 {
                    continue;
                }
                st.beta[j] = new;
                let row = &gram[a * m..(a + 1) * m];
                for (gb, gab) in g.iter_mut().zip(row) {
                    *gb -= gab * delta;
                }
                max_change = max_change.max(delta.abs());
                if let (Some(t), Some(r0)) = (st.trace.as_mut(), r_start.as_ref()) {
                    let mut r = r0.clone();
                    for (k, c) in cols.iter().enumerate() {
                        let moved = st.beta[active[k]] - start[k];
                        for (ri, x) in r.iter_mut().zip(c) {
                            *ri -= x * moved;
                        }
                    }
                    t.push(objective_of(&r, &st.beta, cfg.lambda));
                }
            }
            st.sweeps += 1;
            if max_change < tol {
                break;
            }
        }

        for (k, c) in cols.iter().enumerate() {
            let moved = st.beta[active[k]] - start[k];
            if moved != 0.0 {
                for (ri, x) in st.r.iter_mut().zip(c) {
                    *ri -= x * moved;
                }
            }
        }
    }

    fn full_sweep(&self, st: &mut State, theta: f64, lambda: f64) -> f64 {
        let p = self.p();
        if p < PREFETCH_MIN_COLS || rayon::current_num_threads() < 2 {
            let all: Vec<usize> = (0..p).collect();
            return self.index_sweep(&all, st, theta, lambda, None);
        }
        // Gradients of a block are computed in parallel against the current
        // residual. They stay valid until some coordinate actually moves,
        // after which the rest of the block is refetched.
        let n = self.n() as f64;
        let mut buf = Vec::new();
        let mut max_change = 0.0f64;
        let mut start = 0;
        while start < p {
            let end = (start + PREFETCH_BLOCK).min(p);
            let r = &st.r;
            let grads: Vec<f64> = (start..end)
                .into_par_iter()
                .map_init(Vec::new, |b, j| {
                    if self.diag[j] <= INERT_DIAG {
                        0.0
                    } else {
                        centered_dot(self.x.column(j, b), self.shift[j], r) / n
                    }
                })
                .collect();
            let mut next = end;
            for (k, j) in (start..end).enumerate() {
                if self.diag[j] <= INERT_DIAG {
                    continue;
                }
                let d = self.diag[j];
                let z = grads[k] + d * st.beta[j];
                if st.beta[j] == 0.0 && soft_threshold(z, theta) == 0.0 {
                    continue;
                }
                let col = self.x.column(j, &mut buf);
                let change = self.update(j, col, grads[k], st, theta, lambda);
                max_change = max_change.max(change);
                if change != 0.0 {
                    next = j + 1;
                    break;
                }
            }
            start = next;
        }
        max_change
    }

    fn certificate(&self, st: &State, theta: f64, tol: f64) -> KktCertificate {
        let g = self.gradients(&st.r);
        let mut inactive = 0.0f64;
        let mut active = 0.0f64;
        for (j, &gj) in g.iter().enumerate() {
            let b = st.beta[j];
            if b == 0.0 {
                inactive = inactive.max(gj.abs() - theta);
            } else {
                active = active.max((gj - theta * b.signum()).abs());
            }
        }
        KktCertificate {
            max_inactive_excess: inactive.max(0.0),
            max_active_violation: active,
            tol,
        }
    }
}

fn objective_of(r: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let n = r.len() as f64;
    r.iter().map(|v| v * v).sum::<f64>() / n + lambda * beta.iter().map(|b| b.abs()).sum::<f64>()
}

/// One-shot Lasso fit from β = 0.
pub fn fit_lasso<C: Columns + ?Sized>(x: &C, y: &[f64], cfg: &LassoConfig) -> Result<ModelFit> {
    LassoProblem::new(x, y, cfg.intercept)?.fit(cfg, None)
}
