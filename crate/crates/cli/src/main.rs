use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use fxarb::backtest::StrategySet;

mod commands;
mod config;

use config::{Overrides, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StrategyArg {
    Gnn,
    Lp,
    Both,
}

impl From<StrategyArg> for StrategySet {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Gnn => StrategySet::Gnn,
            StrategyArg::Lp => StrategySet::Lp,
            StrategyArg::Both => StrategySet::Both,
        }
    }
}

/// Graph-network FX prediction and constrained statistical arbitrage, with an
/// LP benchmark. Every flag can also be set through an `FXARB_` variable.
#[derive(Debug, Parser)]
#[command(name = "fxarb", version)]
struct Cli {
    /// TOML run configuration; defaults are used when omitted.
    #[arg(long, global = true, env = "FXARB_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "FXARB_SEED")]
    seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true, env = "FXARB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads; 0 means all cores, 1 runs sequentially.
    #[arg(long, global = true, env = "FXARB_THREADS")]
    threads: Option<usize>,
    #[arg(long, global = true, env = "FXARB_STRATEGY", value_enum)]
    strategy: Option<StrategyArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic market (fx.csv, ir.csv) to the output directory.
    Synth,
    /// Load and clean the configured data; write the cleaned panels and log.
    Ingest,
    /// Train the prediction network at every refit date.
    TrainFxrp,
    /// Run the walk-forward backtest of the GNN and LP strategies.
    Backtest,
    /// Run the invariant battery and print pass/fail per property.
    Verify,
    /// Print the effective configuration as TOML.
    ShowConfig,
}

fn configure_threads(threads: usize) -> Result<()> {
    #[cfg(feature = "parallel")]
    if threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads > 1 {
        log::warn!("built without the `parallel` feature; running on one thread");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    let overrides = Overrides {
        seed: cli.seed,
        out: cli.out,
        threads: cli.threads,
        strategy: cli.strategy.map(Into::into),
    };
    let loaded = RunConfig::load(cli.config.as_deref(), &overrides)?;
    configure_threads(loaded.config.threads)?;
    log::info!("config sha256 {} seed {}", loaded.hash, loaded.config.seed);
    match cli.command {
        Command::Synth => commands::synth(&loaded),
        Command::Ingest => commands::ingest(&loaded),
        Command::TrainFxrp => commands::train_fxrp(&loaded),
        Command::Backtest => commands::backtest(&loaded),
        Command::Verify => commands::verify(&loaded),
        Command::ShowConfig => {
            print!("{}", loaded.config.to_toml()?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
