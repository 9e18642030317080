//! `hicc`: generate, featurize, train, calibrate, score, evaluate, economics
//! and audit, driven by one TOML config.

// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod artifacts;
mod config;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::PipelineConfig;

#[derive(Parser)]
#[command(name = "hicc", version, about = "High-cost claimant prediction pipeline")]
struct Cli {
    /// TOML config; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for featurization, training and scoring (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Config overrides such as `generate.n_members=50000`.
    #[arg(value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic claims dataset to the data directory.
    Generate(Overrides),
    /// Ingest claims and write the feature matrix and cohort file.
    Featurize(Overrides),
    /// Split the cohort and fit the boosted model.
    Train(Overrides),
    /// Fit the isotonic calibrator on the calibration split.
    Calibrate(Overrides),
    /// Score a feature matrix and write `member_id,score`.
    Score {
        /// Feature matrix to score (default: the featurize output).
        #[arg(long)]
        features: Option<PathBuf>,
        /// Destination (default: scores.csv in the output directory).
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Threshold table, stratified report and summary metrics.
    Evaluate {
        #[arg(long)]
        scores: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Care-management scenarios and capacity sweep.
    Economics(Overrides),
    /// ZIP-level regression of scores and costs on minority share.
    Audit(Overrides),
    /// Every step in order.
    Pipeline(Overrides),
}

impl Command {
    fn overrides(&self) -> &[String] {
        match self {
            Command::Generate(o)
            | Command::Featurize(o)
            | Command::Train(o)
            | Command::Calibrate(o)
            | Command::Economics(o)
            | Command::Audit(o)
            | Command::Pipeline(o) => &o.set,
            Command::Score { overrides, .. } | Command::Evaluate { overrides, .. } => &overrides.set,
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .context("configuring worker threads")?;
    }
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), cli.command.overrides())?;
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    match &cli.command {
        Command::Generate(_) => stages::generate(&cfg),
        Command::Featurize(_) => stages::featurize(&cfg),
        Command::Train(_) => stages::train(&cfg),
        Command::Calibrate(_) => stages::calibrate(&cfg),
        Command::Score { features, output, .. } => stages::score(&cfg, features.as_deref(), output.as_deref()),
        Command::Evaluate { scores, .. } => stages::evaluate(&cfg, scores.as_deref()),
        Command::Economics(_) => stages::economics(&cfg),
        Command::Audit(_) => stages::audit(&cfg),
        Command::Pipeline(_) => stages::pipeline(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
