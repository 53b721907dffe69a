use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use echoid_cli::commands::{run_build_dictionary, run_identify, run_reconstruct, run_simulate, run_spectrum};
use echoid_cli::ExperimentConfig;

#[derive(Debug, Parser)]
#[command(
    name = "echoid",
    version,
    about = "Shape identification from multistatic measurements"
)]
struct Cli {
    /// JSON experiment config; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the run generator, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; all cores by default.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one noisy MSR matrix per data frequency.
    Simulate,
    /// Reconstruct scattering coefficients from an MSR set and sweep noise and order.
    Reconstruct {
        /// MSR directory; `<out>/msr` by default.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Precompute descriptor tensors of the dictionary shapes.
    BuildDict,
    /// Identify targets against a built dictionary.
    Identify {
        /// Dictionary directory, overrides the config.
        #[arg(long)]
        dictionary: Option<PathBuf>,
        /// MSR directory of a single target; targets are simulated otherwise.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Singular values of the acquisition operator.
    Spectrum,
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = cli.out {
        config.output = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let manifest = match cli.command {
        Command::Simulate => run_simulate(&config)?,
        Command::Reconstruct { data } => run_reconstruct(&config, data.as_deref())?,
        Command::BuildDict => run_build_dictionary(&config)?,
        Command::Identify { dictionary, data } => run_identify(&config, dictionary.as_deref(), data.as_deref())?,
        Command::Spectrum => run_spectrum(&config)?,
    };
    log::info!(
        "{}: {} outputs, {} failures, config {}",
        manifest.command,
        manifest.outputs.len(),
        manifest.failures.len(),
        &manifest.config_hash[..12]
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
