use beatsim_cli::config::{parse_config, preset_catalog, EngineChoice};
use beatsim_cli::runner::{run_scenario, RunFailure, RunOptions};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

// exit codes: 0 success, 1 configuration error, 2 computation error,
// 3 I/O error
const EXIT_CONFIG: u8 = 1;
const EXIT_COMPUTE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "beatsim",
    about = "Two-photon coincidence scans on feedback interferometers",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write its CSV, metadata, and plot files
    Run {
        /// Scenario configuration file
        config: PathBuf,
        /// Override the scenario's engine (closed_form, history_sum, both)
        #[arg(long)]
        engine: Option<String>,
        /// Directory that relative output paths are resolved against
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads for grid evaluation (0 = machine default)
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Parse and validate a scenario without running it
    Validate {
        /// Scenario configuration file
        config: PathBuf,
    },
    /// List the bundled device presets and their keys
    Presets,
}

fn read_config(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_IO)
    })
}

fn parse_or_report(path: &Path, text: &str) -> Result<beatsim_cli::config::Scenario, ExitCode> {
    parse_config(text).map_err(|errors| {
        for e in &errors {
            eprintln!("error: {}: {e}", path.display());
        }
        eprintln!(
            "{}: {} problem{}",
            path.display(),
            errors.len(),
            if errors.len() == 1 { "" } else { "s" }
        );
        ExitCode::from(EXIT_CONFIG)
    })
}

fn cmd_run(
    config: PathBuf,
    engine: Option<String>,
    out_dir: Option<PathBuf>,
    threads: usize,
) -> ExitCode {
    let text = match read_config(&config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let scenario = match parse_or_report(&config, &text) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let engine = match engine.as_deref().map(str::parse::<EngineChoice>).transpose() {
        Ok(e) => e,
        Err(msg) => {
            eprintln!("error: --engine: {msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let opts = RunOptions { engine, out_dir, threads };
    match run_scenario(&scenario, &opts) {
        Ok(report) => {
            for run in &report.runs {
                println!(
                    "wrote {} ({} points, engine {})",
                    run.csv_path.display(),
                    run.result.values.len(),
                    run.engine
                );
                if let Some(plot) = &run.plot_path {
                    println!("wrote {}", plot.display());
                }
            }
            println!("wrote {}", report.metadata_path.display());
            if let Some(a) = report.agreement {
                println!(
                    "engine agreement: {} points compared, ratio cv {:.3e}",
                    a.points_compared, a.ratio_cv
                );
            }
            ExitCode::SUCCESS
        }
        Err(RunFailure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_COMPUTE)
        }
        Err(e @ RunFailure::Io { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_IO)
        }
    }
}

fn cmd_validate(config: PathBuf) -> ExitCode {
    let text = match read_config(&config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    match parse_or_report(&config, &text) {
        Ok(scenario) => {
            let points: usize = scenario.axes.iter().map(|a| a.steps).product();
            println!(
                "{}: ok ({} grid point{}, engine {})",
                config.display(),
                points,
                if points == 1 { "" } else { "s" },
                scenario.engine
            );
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, engine, out_dir, threads } => cmd_run(config, engine, out_dir, threads),
        Command::Validate { config } => cmd_validate(config),
        Command::Presets => {
            print!("{}", preset_catalog());
            ExitCode::SUCCESS
        }
    }
}
