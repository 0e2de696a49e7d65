//! Least squares and ridge via the normal equations and a Cholesky factor.

use rayon::prelude::*;

use super::{active_set_of, Intercept, Method, ModelFit};
use crate::design::Columns;
use crate::error::{Error, Result};

/// Condition estimates above this are logged.
pub const CONDITION_WARN: f64 = 1e12;
/// A pivot below this fraction of its original diagonal entry is singular.
const PIVOT_RTOL: f64 = 1e-12;

/// Solves `A x = b` for symmetric positive definite `A` (row-major `p × p`).
/// Returns the solution and `(max L_jj / min L_jj)²`, a cheap lower bound on
/// the 2-norm condition number.
pub fn cholesky_solve(a: &[f64], b: &[f64]) -> Result<(Vec<f64>, f64)> {
    let p = b.len();
    assert_eq!(a.len(), p * p, "matrix/vector size mismatch");
    let mut l = a.to_vec();
    for j in 0..p {
        let mut d = l[j * p + j];
        for k in 0..j {
            d -= l[j * p + k] * l[j * p + k];
        }
        if !(d > PIVOT_RTOL * a[j * p + j]) || d <= 0.0 {
            return Err(Error::Singular { pivot: j });
        }
        let ljj = d.sqrt();
        l[j * p + j] = ljj;
        let (head, tail) = l.split_at_mut((j + 1) * p);
        let row_j = &head[j * p..j * p + j];
        tail.par_chunks_mut(p).for_each(|row_i| {
            let mut s = row_i[j];
            for k in 0..j {
                s -= row_i[k] * row_j[k];
            }
            row_i[j] = s / ljj;
        });
    }
    let mut z = b.to_vec();
    for i in 0..p {
        let mut s = z[i];
        for k in 0..i {
            s -= l[i * p + k] * z[k];
        }
        z[i] = s / l[i * p + i];
    }
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= l[k * p + i] * z[k];
        }
        z[i] = s / l[i * p + i];
    }
    let (lo, hi) = (0..p)
        .map(|j| l[j * p + j])
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let cond = if p == 0 { 1.0 } else { (hi / lo).powi(2) };
    Ok((z, cond))
}

/// Column shifts and response shift for the intercept rule.
fn shifts<C: Columns + ?Sized>(x: &C, y: &[f64], intercept: Intercept) -> (Vec<f64>, f64, f64) {
    let n = x.n_rows() as f64;
    let y_mean = y.iter().sum::<f64>() / n;
    match intercept {
        Intercept::ResponseMean => (vec![0.0; x.n_cols()], 0.0, y_mean),
        Intercept::Centered => {
            let m = (0..x.n_cols())
                .into_par_iter()
                .map_init(Vec::new, |buf, j| x.column(j, buf).iter().sum::<f64>() / n)
                .collect();
            (m, y_mean, y_mean)
        }
    }
}

fn check_shape<C: Columns + ?Sized>(x: &C, y: &[f64]) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(Error::SchemaMismatch(format!(
            "design has {} rows, response has {}",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() == 0 {
        return Err(Error::InvalidArgument("empty design".into()));
    }
    Ok(())
}

/// Ordinary least squares. Fails with [`Error::Singular`] when `XᵀX` is not
/// numerically positive definite, which includes every `p > n` design.
pub fn fit_ols<C: Columns + ?Sized>(x: &C, y: &[f64]) -> Result<ModelFit> {
    fit_ridge_with(x, y, 0.0, Intercept::ResponseMean).map(|mut f| {
        f.method = Method::Ols;
        f
    })
}

/// Ridge with the response-mean intercept: minimizes
/// `(1/n)||Y − Xβ||² + λ||β||²`.
pub fn fit_ridge<C: Columns + ?Sized>(x: &C, y: &[f64], lambda: f64) -> Result<ModelFit> {
    fit_ridge_with(x, y, lambda, Intercept::ResponseMean)
}

pub fn fit_ridge_with<C: Columns + ?Sized>(
    x: &C,
    y: &[f64],
    lambda: f64,
    intercept: Intercept,
) -> Result<ModelFit> {
    RidgeSystem::new(x, y, intercept)?.solve(lambda)
}

enum Normal {
    /// `G = XcᵀXc/n` (`p × p`) and `b = Xcᵀyc/n`.
    Primal { g: Vec<f64>, b: Vec<f64> },
    /// `K = XcXcᵀ/n` (`n × n`), used when `p > n`.
    Dual { k: Vec<f64> },
}

/// Normal equations of one design, factored afresh for each λ. Building the
/// Gram (or kernel) matrix dominates the cost, so a λ grid shares it.
pub struct RidgeSystem<'a, C: ?Sized> {
    x: &'a C,
    y: &'a [f64],
    yc: Vec<f64>,
    shift: Vec<f64>,
    y_mean: f64,
    normal: Normal,
}

impl<'a, C: Columns + ?Sized> RidgeSystem<'a, C> {
    pub fn new(x: &'a C, y: &'a [f64], intercept: Intercept) -> Result<Self> {
        check_shape(x, y)?;
        let (n, p) = (x.n_rows(), x.n_cols());
        let (shift, y_shift, y_mean) = shifts(x, y, intercept);
        let yc: Vec<f64> = y.iter().map(|v| v - y_shift).collect();
        let normal = if p > n {
            Normal::Dual {
                k: kernel(x, &shift),
            }
        } else {
            let (g, b) = gram(x, &yc, &shift);
            Normal::Primal { g, b }
        };
        Ok(Self {
            x,
            y,
            yc,
            shift,
            y_mean,
            normal,
        })
    }

    pub fn solve(&self, lambda: f64) -> Result<ModelFit> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        let (n, p) = (self.x.n_rows(), self.x.n_cols());
        let nf = n as f64;
        let (beta, cond) = match &self.normal {
            Normal::Primal { g, b } => {
                let mut a = g.clone();
                for j in 0..p {
                    a[j * p + j] += lambda;
                }
                cholesky_solve(&a, b)?
            }
            // XᵀX has rank at most n < p: the first pivot past the row count
            // cannot be positive.
            Normal::Dual { .. } if lambda == 0.0 => return Err(Error::Singular { pivot: n }),
            Normal::Dual { k } => {
                let mut a = k.clone();
                for i in 0..n {
                    a[i * n + i] += lambda;
                }
                let rhs: Vec<f64> = self.yc.iter().map(|v| v / nf).collect();
                let (alpha, cond) = cholesky_solve(&a, &rhs)?;
                let beta = (0..p)
                    .into_par_iter()
                    .map_init(Vec::new, |buf, j| {
                        let s = self.shift[j];
                        self.x
                            .column(j, buf)
                            .iter()
                            .zip(&alpha)
                            .map(|(v, a)| (v - s) * a)
                            .sum::<f64>()
                    })
                    .collect();
                (beta, cond)
            }
        };
        if cond > CONDITION_WARN {
            log::warn!("normal equations are ill-conditioned (estimate {cond:.3e})");
        }
        let beta0 = self.y_mean - beta.iter().zip(&self.shift).map(|(b, s)| b * s).sum::<f64>();
        let mut fitted = vec![beta0; n];
        let mut buf = Vec::new();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (f, v) in fitted.iter_mut().zip(self.x.column(j, &mut buf)) {
                    *f += b * v;
                }
            }
        }
        let residuals = self.y.iter().zip(&fitted).map(|(a, f)| a - f).collect();
        Ok(ModelFit {
            method: Method::Ridge,
            lambda,
            beta0,
            active_set: active_set_of(&beta),
            beta,
            sweeps_used: 0,
            converged: true,
            residuals,
            kkt: None,
            condition_estimate: Some(cond),
        })
    }
}

fn gram<C: Columns + ?Sized>(x: &C, yc: &[f64], shift: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (n, p) = (x.n_rows(), x.n_cols());
    let nf = n as f64;
    let mut cols = Vec::with_capacity(p);
    let mut buf = Vec::new();
    for j in 0..p {
        let c: Vec<f64> = x.column(j, &mut buf).iter().map(|v| v - shift[j]).collect();
        cols.push(c);
    }
    let mut g = vec![0.0; p * p];
    g.par_chunks_mut(p).enumerate().for_each(|(i, row)| {
        for (k, dst) in row.iter_mut().enumerate() {
            *dst = cols[i].iter().zip(&cols[k]).map(|(a, b)| a * b).sum::<f64>() / nf;
        }
    });
    let b = cols
        .iter()
        .map(|c| c.iter().zip(yc).map(|(a, v)| a * v).sum::<f64>() / nf)
        .collect();
    (g, b)
}

fn kernel<C: Columns + ?Sized>(x: &C, shift: &[f64]) -> Vec<f64> {
    // Fixed column chunks summed in chunk order keep the result independent
    // of thread scheduling.
    const CHUNK: usize = 256;
    const BATCH: usize = 16;
    let (n, p) = (x.n_rows(), x.n_cols());
    let nf = n as f64;
    let mut k = vec![0.0; n * n];
    let starts: Vec<usize> = (0..p).step_by(CHUNK).collect();
    for batch in starts.chunks(BATCH) {
        let partials: Vec<Vec<f64>> = batch
            .par_iter()
            .map(|&start| {
                let mut acc = vec![0.0; n * n];
                let (mut buf, mut c) = (Vec::new(), Vec::with_capacity(n));
                for j in start..(start + CHUNK).min(p) {
                    c.clear();
                    c.extend(x.column(j, &mut buf).iter().map(|v| v - shift[j]));
                    for a in 0..n {
                        let ca = c[a];
                        if ca != 0.0 {
                            for (dst, cb) in acc[a * n..(a + 1) * n].iter_mut().zip(&c) {
                                *dst += ca * cb;
                            }
                        }
                    }
                }
                acc
            })
            .collect();
        for part in partials {
            for (dst, v) in k.iter_mut().zip(part) {
                *dst += v;
            }
        }
    }
    for v in k.iter_mut() {
        *v /= nf;
    }
    k
}
