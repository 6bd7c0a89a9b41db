//! `bmos` command line: generate data, denoise, compare variants, report rates.
//!
//! Exit codes: 0 success, 1 I/O error, 2 config error, 3 parse error, 4 solver error.

use std::path::PathBuf;

use bmos_cli::commands;
use bmos_cli::config::ExperimentConfig;
use bmos_cli::error::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bmos", version, about = "Bregman operator splitting experiments")]
struct Cli {
    /// Experiment config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides `problem.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the piecewise-constant ground truth and its noisy observation.
    Generate,
    /// Denoise a signal file with the configured method and metric.
    Denoise {
        /// Noisy signal, one value per line [default: <out>/signal.txt].
        #[arg(long)]
        signal: Option<PathBuf>,
        /// Ground truth for the error column [default: <out>/u_gt.txt if present].
        #[arg(long)]
        ground_truth: Option<PathBuf>,
    },
    /// Run all six P-R/D-R × Newton/AGD/GD variants on the same data.
    Compare,
    /// Report predicted and measured contraction factors per variant.
    Rates,
    /// Print the effective configuration.
    ShowConfig,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
            ExperimentConfig::parse(&text)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.problem.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load_config(cli)?;
    if let Command::ShowConfig = cli.command {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    std::fs::create_dir_all(&cli.out).map_err(CliError::io(&cli.out))?;
    match &cli.command {
        Command::Generate => commands::generate(&cfg, &cli.out),
        Command::Denoise { signal, ground_truth } => {
            commands::denoise(&cfg, &cli.out, signal.as_deref(), ground_truth.as_deref())
        }
        Command::Compare => commands::compare(&cfg, &cli.out),
        Command::Rates => commands::rates(&cfg, &cli.out),
        Command::ShowConfig => unreachable!(),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
