use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use semimart::config::{parse_config_with, ExperimentKind, Overrides};
use semimart::run::run;
use semimart::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_ASSERT: u8 = 4;

#[derive(Parser)]
#[command(name = "semimart", version, about = "Simulate Ito semimartingales with jumps and check the limit theorems for their discretized functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one path and write it with its functionals.
    Simulate(Common),
    /// Law-of-large-numbers rate study over nested grids.
    Lln(Common),
    /// Central limit theorem campaign with a KS test.
    Clt(Common),
    /// Report which limit theorems apply.
    Check(Common),
    /// Write every limit object along one path.
    Limits(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Upper bound on worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed; overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Exit with status 4 when a threshold in `[assert]` is violated.
    #[arg(long = "assert")]
    check: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Lln(a) => (ExperimentKind::Lln, a),
        Command::Clt(a) => (ExperimentKind::Clt, a),
        Command::Check(a) => (ExperimentKind::Check, a),
        Command::Limits(a) => (ExperimentKind::Limits, a),
    };
    let text = match fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let overrides = Overrides {
        kind: Some(kind),
        seed: args.seed,
    };
    let mut config = match parse_config_with(&text, overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if args.workers == Some(0) {
        eprintln!("error: --workers must be positive");
        return ExitCode::from(EXIT_CONFIG);
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    match run(&config, args.out.as_deref()) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("output: {}", outcome.out_dir.display());
            if args.check && !outcome.failures.is_empty() {
                return ExitCode::from(EXIT_ASSERT);
            }
            ExitCode::SUCCESS
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
