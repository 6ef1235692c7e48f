//! `netinfer`: fit, simulate and check ERGM and AME probit models of
//! directed networks.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 statistical
//! non-convergence (artifacts are still written).

mod commands;
mod config;
mod data;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;

use crate::config::RunConfig;
use crate::output::OutDir;

#[derive(Debug, Parser)]
#[command(name = "netinfer", version, about = "ERGM and AME probit models for directed networks")]
struct Cli {
    /// TOML run configuration; relative paths in it are resolved against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Random seed; overrides the config. Generated and echoed when absent.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads. Results depend on the seed and chain count only.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit an ERGM by Monte-Carlo maximum likelihood.
    FitErgm,
    /// Fit a dyad-level logit or probit regression.
    FitGlm {
        /// `logit` or `probit`; overrides `[glm].link`.
        #[arg(long)]
        link: Option<String>,
    },
    /// Fit an AME probit model by Gibbs sampling.
    FitAme,
    /// Simulate networks from an ERGM or an AME posterior.
    Simulate,
    /// Goodness-of-fit checks and tie-prediction curves for a saved fit.
    Gof,
    /// Compare the fast code paths against the reference implementations.
    Verify {
        #[arg(long, hide = true)]
        corrupt_statistic: Option<f64>,
    },
}

/// How a command that produced its artifacts ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NotConverged,
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if cfg.seed.is_none() {
        // Kept within the signed range so the resolved TOML can hold it.
        let seed = rand::random::<u64>() >> 1;
        eprintln!("seed: {seed}");
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        let cwd = std::env::current_dir()?;
        cfg.out = Some(cwd.join(out));
    }
    if cfg.out.is_none() {
        cfg.out = Some(std::env::current_dir()?.join("netinfer-out"));
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    cfg.threads = Some(cfg.threads.unwrap_or(1).max(1));
    Ok(cfg)
}

fn run(cli: Cli) -> Result<Outcome> {
    let mut cfg = resolve(&cli)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(1))
        .build_global()
        .context("starting worker threads")?;
    let out = OutDir::create(cfg.out.as_deref().expect("resolved"))?;
    let result = match &cli.command {
        Command::FitErgm => commands::fit_ergm(&mut cfg, &out),
        Command::FitGlm { link } => commands::fit_glm(&mut cfg, link.as_deref(), &out),
        Command::FitAme => commands::fit_ame(&mut cfg, &out),
        Command::Simulate => commands::simulate(&mut cfg, &out),
        Command::Gof => commands::gof(&mut cfg, &out),
        Command::Verify { corrupt_statistic } => commands::verify(*corrupt_statistic, &out),
    };
    // The resolved configuration accompanies every run, failed ones included.
    out.text("resolved_config.toml", &cfg.to_toml()?)?;
    let outcome = result?;
    info!("artifacts in {}", cfg.out.as_deref().expect("resolved").display());
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
