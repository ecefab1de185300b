//! `abs`: batch runner for adaptive boson sampling experiments.
//!
//! `abs run <config> <command> [flags]` writes CSV/JSON artifacts to the
//! output directory and prints a JSON run report on stdout.

mod commands;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;
use report::{Artifacts, RunReport, Stopwatch};

#[derive(Parser)]
#[command(
    name = "abs",
    version,
    about = "Adaptive boson sampling experiment runner"
)]
struct Cli {
    #[command(subcommand)]
    action: Action,
}

#[derive(Subcommand)]
enum Action {
    /// Run one command against a config file.
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Mesh,
    Simulate,
    Kernel,
    Tomo,
    Classify,
    PermuteHistogram,
    NoisePredict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Fidelity,
    Overlap,
}

#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Scheme, mesh or noise-model JSON, depending on the command.
    pub config: PathBuf,
    #[arg(value_enum)]
    pub command: Command,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shots per kernel entry (overlap) or per basis (tomo).
    #[arg(long, default_value_t = 10_000)]
    pub shots: u64,
    #[arg(long, value_enum, default_value = "fidelity")]
    pub method: Method,
    /// Noise model JSON; switches states to the noisy model.
    #[arg(long)]
    pub noise: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Number of reassigned kernels for permute-histogram.
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    /// Precomputed kernel CSV for classify.
    #[arg(long)]
    pub kernel: Option<PathBuf>,
    /// Dataset CSV path, or `moons`.
    #[arg(long)]
    pub dataset: Option<String>,
}

fn command_name(command: Command) -> String {
    command
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default()
}

fn run(args: &RunArgs) -> Result<RunReport, CliError> {
    let name = command_name(args.command);
    let mut report = RunReport {
        scheme_id: args
            .config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
        command: name.clone(),
        seed: args.seed,
        ..RunReport::default()
    };
    let mut clock = Stopwatch::start();
    let mut out = Artifacts::default();
    let step = match args.command {
        Command::Mesh => commands::mesh,
        Command::Simulate => commands::simulate,
        Command::Kernel => commands::kernel,
        Command::Tomo => commands::tomo,
        Command::Classify => commands::classify,
        Command::PermuteHistogram => commands::permute_histogram,
        Command::NoisePredict => commands::noise_predict,
    };
    step(args, &mut report, &mut out)?;
    clock.lap(&mut report, "compute");

    let report_name = format!("{name}_report.json");
    report.files = out
        .names()
        .map(str::to_string)
        .chain(std::iter::once(report_name.clone()))
        .collect();
    let timings = std::mem::take(&mut report.timings_ms);
    out.add_json(&report_name, &report)?;
    report.timings_ms = timings;
    out.commit(&args.out)?;
    clock.lap(&mut report, "write");
    Ok(report)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Action::Run(args) = Cli::parse().action;
    match run(&args) {
        Ok(report) => match serde_json::to_string_pretty(&report) {
            Ok(text) => {
                println!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
