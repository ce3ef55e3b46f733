use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use frackin_cli::runner::{run_file, RunContext};
use frackin_cli::scenario::{parse_scenario, Scenario};

#[derive(Parser)]
#[command(
    name = "frackin",
    version,
    about = "Fractional kinetic-equation scenario runner"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory artifacts are written into.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for sweep fan-out (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reserved; echoed into sidecars. All current scenarios are
    /// deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run any scenario config and write its artifacts.
    Run { config: PathBuf },
    /// Run a convergence-sweep config with parallel fan-out.
    Sweep { config: PathBuf },
    /// Parse and validate a config, printing the resolved scenario.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = RunContext {
        out_dir: cli.out_dir,
        seed: cli.seed,
        threads: cli.threads,
    };
    let outcome = match cli.command {
        Command::Run { config } => run_file(&config, &ctx).map(|artifacts| {
            println!("wrote {}", artifacts.csv_path.display());
            for (name, value) in &artifacts.metrics {
                println!("  {name} = {value:.6e}");
            }
        }),
        Command::Sweep { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::FAILURE;
                }
            };
            match parse_scenario(&text) {
                Ok(Scenario::ConvergenceSweep(_)) => run_file(&config, &ctx).map(|artifacts| {
                    println!("wrote {}", artifacts.csv_path.display());
                    for (name, value) in &artifacts.metrics {
                        println!("  {name} = {value:.6e}");
                    }
                }),
                Ok(other) => {
                    eprintln!(
                        "error: `sweep` needs a convergence-sweep config, got kind \"{}\"",
                        other.kind_name()
                    );
                    return ExitCode::FAILURE;
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
        }
        Command::Validate { config } => {
            let text = match std::fs::read_to_string(&config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", config.display());
                    return ExitCode::FAILURE;
                }
            };
            match parse_scenario(&text) {
                Ok(scenario) => {
                    println!(
                        "{}",
                        serde_json::to_string_pretty(&scenario).expect("scenario serializes")
                    );
                    Ok(())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
