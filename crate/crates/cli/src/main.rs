use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pue_cli::{load_config, run, Command, ExperimentConfig};

/// Simulate Kalman-filter-based detection of primary user emulation attacks.
#[derive(Parser)]
#[command(name = "pue-sim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Experiment config (TOML). Defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed, overriding `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory, overriding `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Trials per sweep cell, overriding `run.trials`.
    #[arg(long, global = true)]
    trials: Option<usize>,

    /// Worker threads (0 = all cores), overriding `run.threads`.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// True vs estimated trajectory of one tracking run.
    Track,
    /// P_d and P_m against PU-attacker distance, one curve per SNR.
    SweepDistance,
    /// P_d against achieved P_fa, one curve per SNR.
    SweepRoc,
    /// Tracked-reference detector against the fixed-reference RSS baseline.
    CompareBaseline,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Track => Command::Track,
            Cmd::SweepDistance => Command::SweepDistance,
            Cmd::SweepRoc => Command::SweepRoc,
            Cmd::CompareBaseline => Command::CompareBaseline,
        }
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.run.out = out.clone();
    }
    if let Some(trials) = cli.trials {
        config.run.trials = trials;
    }
    if let Some(threads) = cli.threads {
        config.run.threads = threads;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let result = resolve(&cli).and_then(|config| run(command, &config));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("pue-sim {}: error: {e:#}", command.name());
            ExitCode::FAILURE
        }
    }
}
