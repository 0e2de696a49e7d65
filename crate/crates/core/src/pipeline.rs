//! Subcommand implementations. Each reads its inputs through a
//! [`RunConfig`] and writes delimited text or JSON into the output
//! directory, atomically and without embedding absolute paths.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::config::{LambdaChoice, RunConfig};
use crate::design::{Columns, DesignMatrix};
use crate::error::{Error, Result};
use crate::evaluation::{
    comparison_report, evaluate, metrics_table, persistence_predictions, top_weights, trimester_of,
    MethodEntry, Prediction,
};
use crate::features::{
    apply_standardizer, build_base_features, fit_standardizer,
    DailyFeatureRow, ExpandedDesign, FeatureDescriptor, FeatureSet, StandardizationParams, Variant,
};
use crate::ingest::{assemble_days, merge_sources, parse_hourly_file, DayBlock, HourlyRecord, Variable};
use crate::model::{DesignInfo, Expansion, ModelFile};
use crate::selection::{
    kfold_cv, log_grid, make_lambda_grid, ridge_grid, select_lambda, CvResult, CvSolver,
};
use crate::solvers::{
    fit_ols, lambda_max, Intercept, LassoConfig, LassoProblem, ModelFit, RidgeSystem,
};

pub const CANONICAL_FILE: &str = "canonical_hourly.csv";
pub const INGEST_REPORT: &str = "ingest_report.txt";
pub const FEATURE_MANIFEST: &str = "feature_manifest.csv";
pub const FEATURE_MATRIX: &str = "features.csv";
pub const SKIPPED_DAYS: &str = "skipped_days.csv";
pub const CV_TABLE: &str = "cv_table.csv";
pub const CV_SELECTION: &str = "cv_selection.txt";
pub const MODEL_FILE: &str = "model.json";
pub const EFFECTIVE_CONFIG: &str = "effective_config.toml";
pub const PREDICTIONS: &str = "predictions.csv";
pub const METRICS: &str = "metrics.csv";
pub const SCATTER: &str = "scatter.csv";
pub const COMPARISON: &str = "comparison.csv";
pub const REPORT_SERIES: &str = "report_predictions.csv";
pub const WEIGHTS_LINEAR: &str = "weights_lasso_linear.csv";
pub const WEIGHTS_POLYNOMIAL: &str = "weights_lasso_polynomial.csv";
pub const TOP_WEIGHTS: &str = "top_weights.csv";

/// Points of the warm-start path used to reach a single penalty on the
/// interaction expansion.
const POLY_PATH_POINTS: usize = 20;

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::InvalidArgument(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_out(cfg: &RunConfig, name: &str, text: &str) -> Result<PathBuf> {
    let path = cfg.output_path(name);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}

// ---------------------------------------------------------------- ingest

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub pollutant_rows: usize,
    pub meteorology_rows: usize,
    pub forecast_rows: Option<usize>,
    /// `(file, line, reason)`.
    pub rejected: Vec<(String, usize, String)>,
    pub unparseable_cells: usize,
    pub days: usize,
    pub complete_days: usize,
    pub interpolated_cells: usize,
    /// Days with at least one incomplete variable, and which.
    pub incomplete_days: Vec<(NaiveDate, Vec<Variable>)>,
}

impl IngestReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "pollutant_rows = {}", self.pollutant_rows);
        let _ = writeln!(s, "meteorology_rows = {}", self.meteorology_rows);
        if let Some(f) = self.forecast_rows {
            let _ = writeln!(s, "forecast_rows = {f}");
        }
        let _ = writeln!(s, "rejected_rows = {}", self.rejected.len());
        let _ = writeln!(s, "unparseable_cells = {}", self.unparseable_cells);
        let _ = writeln!(s, "days = {}", self.days);
        let _ = writeln!(s, "complete_days = {}", self.complete_days);
        let _ = writeln!(s, "interpolated_cells = {}", self.interpolated_cells);
        let _ = writeln!(s, "\n[rejected]\nfile,line,reason");
        for (f, l, r) in &self.rejected {
            let _ = writeln!(s, "{f},{l},{r}");
        }
        let _ = writeln!(s, "\n[incomplete_days]\ndate,variables");
        for (d, vars) in &self.incomplete_days {
            let names: Vec<&str> = vars.iter().map(|v| v.column_name()).collect();
            let _ = writeln!(s, "{d},{}", names.join(" "));
        }
        s
    }
}

/// Loaded and gap-filled observation days, optional forecast days, and the
/// merged hourly records.
pub struct Loaded {
    pub days: Vec<DayBlock>,
    pub forecast: Option<Vec<DayBlock>>,
    pub records: Vec<HourlyRecord>,
    pub report: IngestReport,
}

fn display_name(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

pub fn load(cfg: &RunConfig) -> Result<Loaded> {
    let mut report = IngestReport::default();
    let pol = parse_hourly_file(&cfg.resolve(&cfg.pollutant_file), &cfg.pollutant_schema())?;
    let met = parse_hourly_file(&cfg.resolve(&cfg.meteorology_file), &cfg.meteorology_schema())?;
    report.pollutant_rows = pol.records.len();
    report.meteorology_rows = met.records.len();
    report.unparseable_cells = pol.unparseable_cells + met.unparseable_cells;
    for (file, parsed) in [(&cfg.pollutant_file, &pol), (&cfg.meteorology_file, &met)] {
        for r in &parsed.rejected {
            report.rejected.push((display_name(file), r.line, r.reason.clone()));
        }
    }
    let records = merge_sources(&[pol.records, met.records]);
    let days = assemble_days(&records, cfg.max_gap_hours);
    report.days = days.len();
    report.complete_days = days.iter().filter(|d| d.all_complete(&Variable::ALL)).count();
    report.interpolated_cells = days.iter().map(DayBlock::interpolated_total).sum();
    report.incomplete_days = days
        .iter()
        .filter(|d| !d.all_complete(&Variable::ALL))
        .map(|d| {
            let missing = Variable::ALL.into_iter().filter(|v| !d.is_complete(*v)).collect();
            (d.date, missing)
        })
        .collect();

    let forecast = match &cfg.forecast_file {
        Some(f) => {
            let parsed = parse_hourly_file(&cfg.resolve(f), &cfg.meteorology_schema())?;
            report.forecast_rows = Some(parsed.records.len());
            report.unparseable_cells += parsed.unparseable_cells;
            for r in &parsed.rejected {
                report.rejected.push((display_name(f), r.line, r.reason.clone()));
            }
            Some(assemble_days(&parsed.records, cfg.max_gap_hours))
        }
        None => None,
    };
    Ok(Loaded {
        days,
        forecast,
        records,
        report,
    })
}

pub fn cmd_ingest(cfg: &RunConfig) -> Result<IngestReport> {
    let loaded = load(cfg)?;
    let mut buf = Vec::new();
    crate::ingest::write_canonical(&mut buf, &loaded.records)?;
    write_atomic(&cfg.output_path(CANONICAL_FILE), &buf)?;
    write_out(cfg, INGEST_REPORT, &loaded.report.render())?;
    Ok(loaded.report)
}

// ------------------------------------------------------------- featurize

pub fn features(cfg: &RunConfig, variant: Variant) -> Result<FeatureSet> {
    let loaded = load(cfg)?;
    Ok(build_base_features(&loaded.days, loaded.forecast.as_deref(), variant))
}

fn manifest_csv(schema: &[FeatureDescriptor]) -> String {
    let mut s = String::from("index,name,category,parents\n");
    for d in schema {
        let parents = d.parents.map_or_else(String::new, |[a, b]| format!("{a} {b}"));
        let _ = writeln!(s, "{},{},{},{}", d.index, d.name, d.category.as_str(), parents);
    }
    s
}

pub fn cmd_featurize(cfg: &RunConfig) -> Result<FeatureSet> {
    let fs = features(cfg, cfg.variant)?;
    write_out(cfg, FEATURE_MANIFEST, &manifest_csv(&fs.schema))?;
    let mut s = String::from("date,target_date,target,anchor");
    for d in &fs.schema {
        s.push(',');
        s.push_str(&d.name);
    }
    s.push('\n');
    for r in &fs.rows {
        let _ = write!(s, "{},{},{},{}", r.date, r.target_date(), r.target_raw, r.current_anchor);
        for v in &r.x {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    write_out(cfg, FEATURE_MATRIX, &s)?;
    let mut k = String::from("date,reason\n");
    for d in &fs.skipped {
        let _ = writeln!(k, "{},{}", d.date, d.reason);
    }
    write_out(cfg, SKIPPED_DAYS, &k)?;
    Ok(fs)
}

// --------------------------------------------------------------- dataset

/// Training design (linear or streamed expansion) with everything needed
/// to describe its columns.
pub struct Dataset {
    pub variant: Variant,
    pub expansion: Expansion,
    pub schema: Vec<FeatureDescriptor>,
    pub params: StandardizationParams,
    pub train_rows: Vec<DailyFeatureRow>,
    pub test_rows: Vec<DailyFeatureRow>,
    pub y_train: Vec<f64>,
    pub linear: DesignMatrix,
    pub expanded: Option<ExpandedDesign>,
}

impl Dataset {
    pub fn design(&self) -> &dyn Columns {
        match &self.expanded {
            Some(e) => e,
            None => &self.linear,
        }
    }

    /// Retained base descriptors, in design column order.
    pub fn retained_schema(&self) -> Vec<FeatureDescriptor> {
        self.params.retained.iter().map(|&j| self.schema[j].clone()).collect()
    }

    pub fn column_info(&self, j: usize) -> (FeatureDescriptor, Option<(f64, f64)>) {
        match &self.expanded {
            Some(e) => (e.descriptor(j), Some(e.stats(j))),
            None => (self.schema[self.params.retained[j]].clone(), None),
        }
    }

    pub fn column_names(&self) -> Vec<String> {
        match &self.expanded {
            Some(e) => e.descriptors().map(|d| d.name).collect(),
            None => self.retained_schema().into_iter().map(|d| d.name).collect(),
        }
    }

    pub fn model_file(&self, cfg: &RunConfig, fit: &ModelFit) -> ModelFile {
        let column = |j: usize| self.column_info(j);
        ModelFile::from_fit(
            fit,
            &DesignInfo {
                variant: self.variant,
                target_mode: cfg.target_mode,
                expansion: self.expansion,
                base_schema: &self.schema,
                params: &self.params,
                column: &column,
            },
        )
    }

    /// Re-targets the same rows and standardization at another expansion.
    pub fn with_expansion(&self, expansion: Expansion) -> Dataset {
        let expanded = match expansion {
            Expansion::Linear => None,
            Expansion::Polynomial => Some(ExpandedDesign::new(self.linear.clone(), &self.retained_schema())),
        };
        Dataset {
            variant: self.variant,
            expansion,
            schema: self.schema.clone(),
            params: self.params.clone(),
            train_rows: self.train_rows.clone(),
            test_rows: self.test_rows.clone(),
            y_train: self.y_train.clone(),
            linear: self.linear.clone(),
            expanded,
        }
    }
}

pub fn split_rows(
    cfg: &RunConfig,
    rows: Vec<DailyFeatureRow>,
) -> Result<(Vec<DailyFeatureRow>, Vec<DailyFeatureRow>)> {
    let (train, rest): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| cfg.in_train(r.target_date()));
    let test: Vec<_> = rest.into_iter().filter(|r| cfg.in_test(r.target_date())).collect();
    if train.is_empty() {
        return Err(Error::Config(format!(
            "no usable rows in the train range {}..{}",
            cfg.train_start, cfg.train_end
        )));
    }
    if test.is_empty() {
        return Err(Error::Config(format!(
            "no usable rows in the test range {}..{}",
            cfg.test_start, cfg.test_end
        )));
    }
    Ok((train, test))
}

pub fn prepare(cfg: &RunConfig, variant: Variant, expansion: Expansion) -> Result<Dataset> {
    let fs = features(cfg, variant)?;
    let (train_rows, test_rows) = split_rows(cfg, fs.rows)?;
    let params = fit_standardizer(&train_rows, cfg.target_mode)?;
    let (linear, y_train) = apply_standardizer(&params, &train_rows, cfg.target_mode)?;
    let mut ds = Dataset {
        variant,
        expansion: Expansion::Linear,
        schema: fs.schema,
        params,
        train_rows,
        test_rows,
        y_train,
        linear,
        expanded: None,
    };
    if expansion == Expansion::Polynomial {
        ds = ds.with_expansion(Expansion::Polynomial);
        if let Some(e) = &ds.expanded {
            let mb = e.resident_bytes() as f64 / (1024.0 * 1024.0);
            log::info!(
                "interaction expansion: {} columns streamed from a {}x{} base ({mb:.1} MiB resident)",
                e.n_cols(),
                e.n_rows(),
                e.p0()
            );
            if mb > cfg.memory_budget_mb {
                log::warn!(
                    "expanded working set {mb:.1} MiB exceeds the budget of {} MiB",
                    cfg.memory_budget_mb
                );
            }
        }
    }
    Ok(ds)
}

// -------------------------------------------------------------------- cv

pub fn run_cv(cfg: &RunConfig, ds: &Dataset) -> Result<CvResult> {
    let x = ds.design();
    let grid = make_lambda_grid(x, &ds.y_train, cfg.cv.n_points, cfg.cv.ratio)?;
    kfold_cv(
        x,
        &ds.y_train,
        cfg.cv.k,
        &grid,
        cfg.cv.seed,
        cfg.cv.fold_mode,
        CvSolver::Lasso(cfg.solver.lasso(0.0)),
    )
}

fn selection_text(cfg: &RunConfig, cv: &CvResult) -> String {
    let chosen = select_lambda(cv, cfg.cv.rule);
    format!(
        "lambda_min = {}\nlambda_1se = {}\nrule = {:?}\nselected = {}\nk = {}\nseed = {}\nfold_mode = {:?}\nunconverged_fits = {}\n",
        cv.lambda_min, cv.lambda_1se, cfg.cv.rule, chosen, cv.k, cv.seed, cv.fold_mode, cv.unconverged_fits
    )
}

fn write_cv(cfg: &RunConfig, cv: &CvResult) -> Result<()> {
    write_out(cfg, CV_TABLE, &cv.to_table())?;
    write_out(cfg, CV_SELECTION, &selection_text(cfg, cv))?;
    Ok(())
}

pub fn cmd_cv(cfg: &RunConfig) -> Result<CvResult> {
    let ds = prepare(cfg, cfg.variant, cfg.expansion)?;
    let cv = run_cv(cfg, &ds)?;
    write_cv(cfg, &cv)?;
    Ok(cv)
}

// ----------------------------------------------------------------- train

/// Lasso at one penalty. On streamed designs the fit follows a short
/// warm-started path from λ_max, which converges far faster than a cold
/// start at a small penalty.
pub fn fit_lasso_at(x: &dyn Columns, y: &[f64], cfg: &LassoConfig) -> Result<ModelFit> {
    let prob = LassoProblem::new(x, y, cfg.intercept)?;
    if !x.is_streamed() {
        return prob.fit(cfg, None);
    }
    let top = lambda_max(x, y);
    if cfg.lambda >= top || cfg.lambda == 0.0 {
        return prob.fit(cfg, None);
    }
    let mut grid = log_grid(top, cfg.lambda, POLY_PATH_POINTS);
    grid.dedup();
    let mut last = None;
    prob.path(&grid, cfg, |_, f| last = Some(f))?;
    Ok(last.expect("non-empty path"))
}

/// Resolves a penalty choice, running CV when asked.
fn resolve_lambda(cfg: &RunConfig, ds: &Dataset, choice: LambdaChoice) -> Result<(f64, Option<CvResult>)> {
    match choice {
        LambdaChoice::Value(v) => Ok((v, None)),
        LambdaChoice::Cv => {
            let cv = run_cv(cfg, ds)?;
            Ok((select_lambda(&cv, cfg.cv.rule), Some(cv)))
        }
    }
}

fn warn_if_unconverged(fit: &ModelFit) {
    if !fit.converged {
        log::warn!(
            "fit at lambda={} did not converge in {} sweeps; results written anyway",
            fit.lambda,
            fit.sweeps_used
        );
    }
}

pub fn cmd_train(cfg: &RunConfig) -> Result<ModelFile> {
    let ds = prepare(cfg, cfg.variant, cfg.expansion)?;
    let (lambda, cv) = resolve_lambda(cfg, &ds, cfg.lambda)?;
    if let Some(cv) = &cv {
        write_cv(cfg, cv)?;
    }
    let fit = fit_lasso_at(ds.design(), &ds.y_train, &cfg.solver.lasso(lambda))?;
    warn_if_unconverged(&fit);
    let model = ds.model_file(cfg, &fit);
    write_out(cfg, MODEL_FILE, &model.to_json()?)?;
    write_out(cfg, EFFECTIVE_CONFIG, &cfg.to_toml_string()?)?;
    Ok(model)
}

// --------------------------------------------------------------- predict

pub fn predict_rows(model: &ModelFile, rows: &[DailyFeatureRow]) -> Result<Vec<Prediction>> {
    rows.iter()
        .map(|r| {
            Ok(Prediction {
                date: r.target_date(),
                observed: r.target_raw,
                predicted: model.predict(&r.x, r.current_anchor)?,
            })
        })
        .collect()
}

pub fn predictions_csv(preds: &[Prediction]) -> String {
    let mut s = String::from("date,observed,predicted\n");
    for p in preds {
        let _ = writeln!(s, "{},{},{}", p.date, p.observed, p.predicted);
    }
    s
}

pub fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "observed", "predicted"] {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "expected date,observed,predicted".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let bad = |what: &str| Error::SchemaMismatch(format!("{}: bad {what} in {:?}", path.display(), rec));
        out.push(Prediction {
            date: NaiveDate::parse_from_str(&rec[0], "%Y-%m-%d").map_err(|_| bad("date"))?,
            observed: rec[1].parse().map_err(|_| bad("observed"))?,
            predicted: rec[2].parse().map_err(|_| bad("predicted"))?,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyInput { path: path.to_path_buf() });
    }
    Ok(out)
}

pub fn cmd_predict(cfg: &RunConfig, model_path: &Path) -> Result<Vec<Prediction>> {
    let model = ModelFile::load(model_path)?;
    if model.target_mode != cfg.target_mode {
        log::warn!("model target mode {:?} overrides the config", model.target_mode);
    }
    let fs = features(cfg, model.variant)?;
    let (_, test) = split_rows(cfg, fs.rows)?;
    let preds = predict_rows(&model, &test)?;
    write_out(cfg, PREDICTIONS, &predictions_csv(&preds))?;
    Ok(preds)
}

// -------------------------------------------------------------- evaluate

fn scatter_csv(preds: &[Prediction]) -> String {
    let mut s = String::from("trimester,date,observed,predicted\n");
    let mut sorted: Vec<&Prediction> = preds.iter().collect();
    sorted.sort_by_key(|p| (trimester_of(p.date), p.date));
    for p in sorted {
        let _ = writeln!(s, "T{},{},{},{}", trimester_of(p.date) + 1, p.date, p.observed, p.predicted);
    }
    s
}

pub fn cmd_evaluate(cfg: &RunConfig, predictions_path: &Path) -> Result<crate::evaluation::EvalMetrics> {
    let preds = read_predictions(predictions_path)?;
    let m = evaluate(&preds)?;
    write_out(cfg, METRICS, &metrics_table(&m))?;
    write_out(cfg, SCATTER, &scatter_csv(&preds))?;
    Ok(m)
}

// ---------------------------------------------------------------- report

fn weights_csv(model: &ModelFile) -> String {
    let mut terms = model.terms.clone();
    terms.sort_by(|a, b| {
        b.weight
            .abs()
            .partial_cmp(&a.weight.abs())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.index.cmp(&b.index))
    });
    let mut s = String::from("index,name,weight\n");
    for t in terms {
        let _ = writeln!(s, "{},{},{}", t.index, t.name, t.weight);
    }
    s
}

pub struct ReportOutput {
    pub table: String,
    pub entries: Vec<MethodEntry>,
}

pub fn cmd_report(cfg: &RunConfig) -> Result<ReportOutput> {
    let ds = prepare(cfg, cfg.variant, Expansion::Linear)?;
    let p_lin = ds.linear.ncols();
    let mut entries = Vec::new();
    let mut top = String::from("method,rank,index,name,weight\n");
    let names = ds.column_names();

    // Lasso on the base features.
    let (lambda, cv) = resolve_lambda(cfg, &ds, cfg.lambda)?;
    if let Some(cv) = &cv {
        write_cv(cfg, cv)?;
    }
    let fit = fit_lasso_at(&ds.linear, &ds.y_train, &cfg.solver.lasso(lambda))?;
    warn_if_unconverged(&fit);
    let model = ds.model_file(cfg, &fit);
    write_out(cfg, WEIGHTS_LINEAR, &weights_csv(&model))?;
    for (r, w) in top_weights(&fit.beta, &names, cfg.report.top_k).iter().enumerate() {
        let _ = writeln!(top, "lasso-linear,{},{},{},{}", r + 1, w.index, w.name, w.weight);
    }
    entries.push(MethodEntry {
        label: "lasso-linear".into(),
        predictions: Some(predict_rows(&model, &ds.test_rows)?),
        features: Some((fit.nonzero(), p_lin)),
        note: Some(format!("lambda = {lambda}")),
    });

    // Lasso on the interaction expansion.
    if cfg.report.polynomial {
        let poly = ds.with_expansion(Expansion::Polynomial);
        let (lambda_p, _) = match cfg.report.polynomial_lambda {
            Some(choice) => resolve_lambda(cfg, &poly, choice)?,
            None => (lambda, None),
        };
        let fit = fit_lasso_at(poly.design(), &poly.y_train, &cfg.solver.lasso(lambda_p))?;
        warn_if_unconverged(&fit);
        let model = poly.model_file(cfg, &fit);
        write_out(cfg, WEIGHTS_POLYNOMIAL, &weights_csv(&model))?;
        let pnames: Vec<String> = fit
            .active_set
            .iter()
            .map(|&j| poly.column_info(j).0.name)
            .collect();
        let sparse_beta: Vec<f64> = fit.active_set.iter().map(|&j| fit.beta[j]).collect();
        for (r, w) in top_weights(&sparse_beta, &pnames, cfg.report.top_k).iter().enumerate() {
            let _ = writeln!(
                top,
                "lasso-polynomial,{},{},{},{}",
                r + 1,
                fit.active_set[w.index],
                w.name,
                w.weight
            );
        }
        entries.push(MethodEntry {
            label: "lasso-polynomial".into(),
            predictions: Some(predict_rows(&model, &ds.test_rows)?),
            features: Some((fit.nonzero(), fit.beta.len())),
            note: Some(format!("lambda = {lambda_p}")),
        });
    }

    // Ridge, penalty chosen by CV on its own grid with the same folds.
    let rgrid = ridge_grid(cfg.cv.n_points.clamp(2, 50));
    let rcv = kfold_cv(
        &ds.linear,
        &ds.y_train,
        cfg.cv.k,
        &rgrid,
        cfg.cv.seed,
        cfg.cv.fold_mode,
        CvSolver::Ridge,
    )?;
    let rlambda = select_lambda(&rcv, cfg.cv.rule);
    let rfit = RidgeSystem::new(&ds.linear, &ds.y_train, Intercept::ResponseMean)?.solve(rlambda)?;
    let rmodel = ds.model_file(cfg, &rfit);
    entries.push(MethodEntry {
        label: "ridge".into(),
        predictions: Some(predict_rows(&rmodel, &ds.test_rows)?),
        features: Some((rfit.nonzero(), p_lin)),
        note: Some(format!("lambda = {rlambda}")),
    });

    // Unpenalized least squares.
    match fit_ols(&ds.linear, &ds.y_train) {
        Ok(ofit) => {
            let omodel = ds.model_file(cfg, &ofit);
            entries.push(MethodEntry {
                label: "mlr".into(),
                predictions: Some(predict_rows(&omodel, &ds.test_rows)?),
                features: Some((ofit.nonzero(), p_lin)),
                note: None,
            });
        }
        Err(Error::Singular { pivot }) => entries.push(MethodEntry {
            label: "mlr".into(),
            predictions: None,
            features: Some((p_lin, p_lin)),
            note: Some(format!(
                "normal equations singular at pivot {pivot} ({} rows, {p_lin} features)",
                ds.y_train.len()
            )),
        }),
        Err(e) => return Err(e),
    }

    entries.push(MethodEntry {
        label: "persistence".into(),
        predictions: Some(persistence_predictions(&ds.test_rows)),
        features: None,
        note: None,
    });

    let table = comparison_report(&entries)?;
    write_out(cfg, COMPARISON, &table)?;
    write_out(cfg, TOP_WEIGHTS, &top)?;
    write_out(cfg, REPORT_SERIES, &series_csv(&entries))?;
    Ok(ReportOutput { table, entries })
}

/// Per-day observed value and every method's forecast.
fn series_csv(entries: &[MethodEntry]) -> String {
    let fitted: Vec<&MethodEntry> = entries.iter().filter(|e| e.predictions.is_some()).collect();
    let mut s = String::from("date,observed");
    for e in &fitted {
        s.push(',');
        s.push_str(&e.label);
    }
    s.push('\n');
    if let Some(first) = fitted.first().and_then(|e| e.predictions.as_ref()) {
        for (i, p) in first.iter().enumerate() {
            let _ = write!(s, "{},{}", p.date, p.observed);
            for e in &fitted {
                let _ = write!(s, ",{}", e.predictions.as_ref().expect("filtered")[i].predicted);
            }
            s.push('\n');
        }
    }
    s
}
