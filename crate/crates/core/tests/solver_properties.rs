use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ozone_lasso::design::DesignMatrix;
use ozone_lasso::selection::make_lambda_grid;
use ozone_lasso::solvers::{
    fit_lasso, fit_ols, fit_ridge, lambda_max, Intercept, LassoConfig, LassoProblem, Strategy,
};

/// Standardized Gaussian design and a centered response with the given
/// leading weights.
fn fixture(seed: u64, n: usize, p: usize, weights: &[f64], noise: f64) -> (DesignMatrix, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || -> f64 { StandardNormal.sample(&mut rng) };
    let cols: Vec<Vec<f64>> = (0..p)
        .map(|_| {
            let c: Vec<f64> = (0..n).map(|_| draw()).collect();
            let m = c.iter().sum::<f64>() / n as f64;
            let s = (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
            c.iter().map(|v| (v - m) / s).collect()
        })
        .collect();
    let mut y: Vec<f64> = (0..n)
        .map(|i| weights.iter().enumerate().map(|(j, w)| w * cols[j][i]).sum::<f64>() + noise * draw())
        .collect();
    let m = y.iter().sum::<f64>() / n as f64;
    y.iter_mut().for_each(|v| *v -= m);
    (DesignMatrix::from_columns(cols), y)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|b| b * b).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn objective_never_increases(seed in any::<u64>(), frac in 0.01f64..0.9) {
        let (x, y) = fixture(seed, 30, 8, &[1.5, -1.0, 0.5], 0.5);
        let prob = LassoProblem::new(&x, &y, Intercept::ResponseMean).unwrap();
        let lambda = frac * lambda_max(&x, &y);
        let (fit, trace) = prob.fit_traced(&LassoConfig::with_lambda(lambda), None).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(!trace.is_empty());
        let start = prob.objective(&vec![0.0; 8], lambda);
        let mut prev = start;
        for &f in &trace {
            prop_assert!(f <= prev + 1e-12 * start.max(1.0), "objective rose from {prev} to {f}");
            prev = f;
        }
    }

    #[test]
    fn active_set_matches_full_sweep(seed in any::<u64>(), frac in 0.01f64..0.9) {
        let (x, y) = fixture(seed, 40, 15, &[2.0, 0.0, -1.0, 0.7], 1.0);
        let lambda = frac * lambda_max(&x, &y);
        let active = fit_lasso(&x, &y, &LassoConfig::with_lambda(lambda)).unwrap();
        let full = fit_lasso(&x, &y, &LassoConfig { strategy: Strategy::FullSweep, ..LassoConfig::with_lambda(lambda) }).unwrap();
        prop_assert!(active.converged && full.converged);
        prop_assert!(max_diff(&active.beta, &full.beta) <= 1e-6);
    }

    #[test]
    fn l1_norm_shrinks_with_lambda(seed in any::<u64>(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (x, y) = fixture(seed, 35, 12, &[1.0, -2.0, 0.5, 0.25], 1.0);
        let top = lambda_max(&x, &y);
        let (lo, hi) = (a.min(b) * top, a.max(b) * top);
        let small = fit_lasso(&x, &y, &LassoConfig::with_lambda(lo)).unwrap();
        let large = fit_lasso(&x, &y, &LassoConfig::with_lambda(hi)).unwrap();
        prop_assert!(large.l1_norm() <= small.l1_norm() + 1e-8);
    }

    #[test]
    fn converged_fits_carry_a_certificate(seed in any::<u64>(), frac in 0.0f64..1.2) {
        let (x, y) = fixture(seed, 25, 40, &[1.0, 1.0, -1.0], 0.3);
        let cfg = LassoConfig::with_lambda(frac * lambda_max(&x, &y));
        let fit = fit_lasso(&x, &y, &cfg).unwrap();
        if fit.converged {
            let kkt = fit.kkt.expect("certificate");
            prop_assert!(kkt.holds());
            prop_assert!(kkt.tol <= cfg.kkt_tol());
        }
    }
}

#[test]
fn warm_and_cold_paths_agree() {
    for seed in 0..5 {
        let (x, y) = fixture(seed, 60, 20, &[1.0, -0.5, 0.0, 0.3], 0.8);
        let grid = make_lambda_grid(&x, &y, 30, 1e-3).unwrap();
        let prob = LassoProblem::new(&x, &y, Intercept::ResponseMean).unwrap();
        let cfg = LassoConfig::default();
        let mut worst = 0.0f64;
        prob.path(&grid, &cfg, |k, warm| {
            let cold = prob.fit(&LassoConfig { lambda: grid[k], ..cfg }, None).unwrap();
            worst = worst.max(max_diff(&warm.beta, &cold.beta));
        })
        .unwrap();
        assert!(worst <= 1e-6, "seed {seed}: warm and cold differ by {worst}");
    }
}

#[test]
fn ridge_norm_decreases_toward_zero() {
    let (x, y) = fixture(7, 30, 10, &[1.0, 2.0, -1.0], 1.0);
    let mut prev = f64::INFINITY;
    for e in -4..=6 {
        let norm = l2(&fit_ridge(&x, &y, 10f64.powi(e)).unwrap().beta);
        assert!(norm < prev, "λ = 1e{e}: {norm} ≥ {prev}");
        prev = norm;
    }
    assert!(prev < 1e-5, "norm at λ = 1e6 is {prev}");
}

#[test]
fn unpenalized_ridge_is_ols() {
    let (x, y) = fixture(8, 50, 10, &[1.0, -1.0, 0.5, 0.2], 0.7);
    let ridge = fit_ridge(&x, &y, 0.0).unwrap();
    let ols = fit_ols(&x, &y).unwrap();
    assert!(max_diff(&ridge.beta, &ols.beta) <= 1e-10);
}

#[test]
fn lasso_sparser_than_ridge_on_noise_columns() {
    let (x, y) = fixture(9, 80, 53, &[2.0, -1.5, 1.0], 1.0);
    let lambda = 0.1 * lambda_max(&x, &y);
    let lasso = fit_lasso(&x, &y, &LassoConfig::with_lambda(lambda)).unwrap();
    let ridge = fit_ridge(&x, &y, lambda).unwrap();
    assert_eq!(ridge.nonzero(), x.ncols());
    assert!(lasso.nonzero() < ridge.nonzero());
    assert!((0..3).all(|j| lasso.beta[j] != 0.0));
}

#[test]
fn centered_mode_ignores_response_offset() {
    let (x, y) = fixture(10, 40, 6, &[1.0, 0.5], 0.5);
    let shifted: Vec<f64> = y.iter().map(|v| v + 100.0).collect();
    let cfg = LassoConfig {
        intercept: Intercept::Centered,
        ..LassoConfig::with_lambda(0.05)
    };
    let a = fit_lasso(&x, &y, &cfg).unwrap();
    let b = fit_lasso(&x, &shifted, &cfg).unwrap();
    assert!(max_diff(&a.beta, &b.beta) <= 1e-9);
    assert!((b.beta0 - a.beta0 - 100.0).abs() <= 1e-9);
}
