use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dispersive_lab::config::ExperimentConfig;
use dispersive_lab::{run_and_emit, scenarios};

/// Overrides the worker thread count.
const THREADS_VAR: &str = "DISPERSIVE_LAB_THREADS";

#[derive(Parser)]
#[command(name = "dispersive-lab", version, about = "Run dispersive-core experiments from TOML configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; exit 0 if every check passes, 1 otherwise, 2 on a config error
    Run { config: PathBuf },
    /// Print the scenario names
    ListScenarios,
    /// Parse and validate a config without running it
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(v) = std::env::var(THREADS_VAR) {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    eprintln!("warning: {THREADS_VAR}: {e}");
                }
            }
            _ => {
                eprintln!("error: {THREADS_VAR} must be a positive integer, got {v:?}");
                return ExitCode::from(2);
            }
        }
    }
    match cli.command {
        Command::ListScenarios => {
            for name in scenarios::names() {
                println!("{name:14} {}", scenarios::describe(name));
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(cfg) => {
                println!("{}: ok (scenario {})", config.display(), cfg.scenario);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {}: {e}", config.display());
                ExitCode::from(2)
            }
        },
        Command::Run { config } => {
            let cfg = match ExperimentConfig::load(&config) {
                Ok(cfg) => cfg,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            match run_and_emit(&cfg) {
                Ok((outcome, files)) => {
                    for c in &outcome.checks {
                        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                    }
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                    if outcome.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
