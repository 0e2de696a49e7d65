use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ozone_lasso::config::{FoldsOverride, LambdaChoice, Overrides, RunConfig};
use ozone_lasso::features::Variant;
use ozone_lasso::model::Expansion;
use ozone_lasso::pipeline;
use ozone_lasso::synth::{write_synthetic, SynthSpec};
use ozone_lasso::Result;

/// Sparse linear next-day ozone forecasting.
#[derive(Parser)]
#[command(name = "ozone-lasso", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, merge and gap-fill the hourly files; write the canonical hourly file and a report.
    Ingest(Common),
    /// Build the base daily features; write the manifest and the feature matrix.
    Featurize(Common),
    /// Cross-validate the Lasso penalty over a log grid.
    Cv(Common),
    /// Fit the model on the training range and write model.json.
    Train(Common),
    /// Forecast the test range with a saved model.
    Predict {
        #[command(flatten)]
        common: Common,
        /// Model file; defaults to model.json in the output directory.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Score a prediction series.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Prediction file; defaults to predictions.csv in the output directory.
        #[arg(long)]
        predictions: Option<PathBuf>,
    },
    /// Fit every method and write the comparison table and weight dumps.
    Report(Common),
    /// Generate a synthetic data set with a planted sparse relation.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    config: PathBuf,
    /// Seed for fold assignment.
    #[arg(long)]
    seed: Option<u64>,
    /// Target statistic: max or max8h.
    #[arg(long, value_parser = parse_variant)]
    variant: Option<Variant>,
    /// Design: linear or polynomial.
    #[arg(long)]
    expansion: Option<Expansion>,
    /// Penalty: a non-negative number, or "cv".
    #[arg(long)]
    lambda: Option<LambdaChoice>,
    /// Fold count, or fold mode (random | blocked).
    #[arg(long)]
    folds: Option<FoldsOverride>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 365)]
    n_days: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of planted features.
    #[arg(long, default_value_t = 5)]
    sparsity: usize,
    /// Signal-to-noise variance ratio; "inf" for none.
    #[arg(long, default_value_t = 20.0)]
    snr: f64,
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    ozone_lasso::config::parse_variant(s).map_err(|e| e.to_string())
}

fn load(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(&c.config)?;
    cfg.apply(&Overrides {
        seed: c.seed,
        variant: c.variant,
        expansion: c.expansion,
        lambda: c.lambda,
        folds: c.folds,
        output_dir: c.out.clone(),
    })?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(c) => {
            let r = pipeline::cmd_ingest(&load(&c)?)?;
            log::info!(
                "{} days, {} interpolated cells, {} rejected rows",
                r.days,
                r.interpolated_cells,
                r.rejected.len()
            );
        }
        Command::Featurize(c) => {
            let fs = pipeline::cmd_featurize(&load(&c)?)?;
            log::info!("{} rows, {} skipped days", fs.rows.len(), fs.skipped.len());
        }
        Command::Cv(c) => {
            let cv = pipeline::cmd_cv(&load(&c)?)?;
            println!("lambda_min = {}\nlambda_1se = {}", cv.lambda_min, cv.lambda_1se);
        }
        Command::Train(c) => {
            let m = pipeline::cmd_train(&load(&c)?)?;
            println!("lambda = {}\nactive = {} of {}", m.lambda, m.n_active(), m.n_candidates);
        }
        Command::Predict { common, model } => {
            let cfg = load(&common)?;
            let model = model.unwrap_or_else(|| cfg.output_path(pipeline::MODEL_FILE));
            let preds = pipeline::cmd_predict(&cfg, &model)?;
            log::info!("{} predictions", preds.len());
        }
        Command::Evaluate { common, predictions } => {
            let cfg = load(&common)?;
            let path = predictions.unwrap_or_else(|| cfg.output_path(pipeline::PREDICTIONS));
            let m = pipeline::cmd_evaluate(&cfg, &path)?;
            println!("n = {}\nrmse = {:.4}\nmae = {:.4}", m.n, m.rmse, m.mae);
        }
        Command::Report(c) => {
            let out = pipeline::cmd_report(&load(&c)?)?;
            print!("{}", out.table);
        }
        Command::Synth(a) => {
            let spec = SynthSpec {
                n_days: a.n_days,
                seed: a.seed,
                sparsity: a.sparsity,
                snr: a.snr,
                ..SynthSpec::default()
            };
            let truth = write_synthetic(&spec, &a.out)?;
            log::info!("planted {} terms, noise sd {}", truth.support.len(), truth.noise_sd);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
