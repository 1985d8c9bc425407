use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use randamp::cli::config::ExperimentConfig;
use randamp::cli::{run, Command, RunOptions};

#[derive(Parser)]
#[command(name = "randamp", version, about = "Device-independent randomness amplification toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of protocol runs (overrides `simulate.trials`).
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Solve the predictability LPs and check them against (11+7δ)/32.
    Certify,
    /// Monte Carlo runs of the protocol.
    Simulate,
    /// Exact de Finetti statistics on a small system.
    Definetti,
    /// Validate the quantum state, bases and Born-rule box.
    QuantumCheck,
    /// Print every closed-form bound for the given parameters.
    Bounds,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Certify => Command::Certify,
        Cmd::Simulate => Command::Simulate,
        Cmd::Definetti => Command::Definetti,
        Cmd::QuantumCheck => Command::QuantumCheck,
        Cmd::Bounds => Command::Bounds,
    };
    let config = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => ExperimentConfig::default(),
    };
    let opts = RunOptions { out: cli.out, seed: cli.seed, trials: cli.trials, jobs: cli.jobs };
    match run(command, &config, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            println!("outputs written to {}", opts.out.display());
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
