use ozone_lasso::config::RunConfig;
use ozone_lasso::evaluation::evaluate;
use ozone_lasso::model::Expansion;
use ozone_lasso::pipeline::{self, Dataset};
use ozone_lasso::selection::make_lambda_grid;
use ozone_lasso::solvers::{LassoProblem, ModelFit};
use ozone_lasso::synth::{write_synthetic, SynthSpec, TruthManifest, CONFIG_FILE};

fn prepared(spec: &SynthSpec) -> (tempfile::TempDir, TruthManifest, RunConfig, Dataset) {
    let dir = tempfile::tempdir().unwrap();
    let truth = write_synthetic(spec, dir.path()).unwrap();
    let cfg = RunConfig::load(&dir.path().join(CONFIG_FILE)).unwrap();
    let ds = pipeline::prepare(&cfg, cfg.variant, Expansion::Linear).unwrap();
    (dir, truth, cfg, ds)
}

fn test_rmse(cfg: &RunConfig, ds: &Dataset, fit: &ModelFit) -> f64 {
    let model = ds.model_file(cfg, fit);
    evaluate(&pipeline::predict_rows(&model, &ds.test_rows).unwrap()).unwrap().rmse
}

#[test]
fn noiseless_relation_is_recovered_to_machine_scale() {
    let spec = SynthSpec {
        n_days: 300,
        snr: f64::INFINITY,
        ..SynthSpec::default()
    };
    let (_dir, truth, mut cfg, ds) = prepared(&spec);
    assert_eq!(truth.noise_sd, 0.0);
    // The default tol leaves an O(1e-5) coefficient error; tighten it.
    cfg.solver.tol = 1e-12;
    cfg.solver.max_sweeps = 200_000;
    let x = ds.design();
    let grid = make_lambda_grid(x, &ds.y_train, 80, 1e-10).unwrap();
    let prob = LassoProblem::new(x, &ds.y_train, cfg.solver.lasso(0.0).intercept).unwrap();
    let mut last = None;
    prob.path(&grid, &cfg.solver.lasso(grid[0]), |_, fit| last = Some(fit))
        .unwrap();
    let fit = last.unwrap();
    let rmse = test_rmse(&cfg, &ds, &fit);
    assert!(rmse < 1e-6, "test RMSE {rmse:e} at λ = {:e}", fit.lambda);
}

#[test]
fn strong_signal_support_is_selected() {
    let spec = SynthSpec {
        n_days: 200,
        seed: 5,
        snr: 400.0,
        ..SynthSpec::default()
    };
    let (_dir, truth, cfg, ds) = prepared(&spec);
    let cv = pipeline::run_cv(&cfg, &ds).unwrap();
    let fit = pipeline::fit_lasso_at(ds.design(), &ds.y_train, &cfg.solver.lasso(cv.lambda_min)).unwrap();
    let names = ds.column_names();
    for term in &truth.support {
        let j = names.iter().position(|n| *n == term.name).expect("planted column retained");
        assert!(fit.beta[j] != 0.0, "{} not selected", term.name);
    }
}
