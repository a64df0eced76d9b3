use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qil_cli::commands;
use qil_cli::config::{CommandKind, RunConfig};

#[derive(Parser)]
#[command(
    name = "qil",
    about = "Quantile surrogate-likelihood fits, posterior sampling, data simulation, and benchmark studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a trace CSV of the draws.
    #[arg(long)]
    trace: bool,
    /// Include wall-clock timing in the report (reruns then differ).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Point estimation by penalized least squares or maximization.
    Fit(Common),
    /// Posterior sampling (am, vis, metropolis, abc).
    Sample(Common),
    /// Write simulated study data sets.
    Simulate(Common),
    /// Quantile-count or depth-based row selection.
    Select(Common),
    /// Benchmark studies over models x n x epsilon.
    Bench(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, common) = match &cli.command {
        Command::Fit(c) => (CommandKind::Fit, c),
        Command::Sample(c) => (CommandKind::Sample, c),
        Command::Simulate(c) => (CommandKind::Simulate, c),
        Command::Select(c) => (CommandKind::Select, c),
        Command::Bench(c) => (CommandKind::Bench, c),
    };

    let mut cfg = match RunConfig::load(&common.config) {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if cfg.command != kind {
        eprintln!(
            "error: config declares command {:?} but `{:?}` was invoked",
            cfg.command, kind
        );
        return ExitCode::from(2);
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    cfg.trace |= common.trace;
    cfg.timing |= common.timing;

    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
