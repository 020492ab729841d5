//! `blameless-ctrl`: compute blamelessly optimal control sequences under
//! priority-ordered polytopic safety constraints.

use blameless_ctrl::error::CliError;
use blameless_ctrl::{commands, config};
use clap::{Args, Parser, Subcommand};
use config::Overrides;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "blameless-ctrl",
    version,
    about = "Blamelessly optimal control over priority-ordered polytopic safety sets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for artifacts.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the discretization step (seconds).
    #[arg(long)]
    dt: Option<f64>,
    /// Override the horizon length (steps).
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize the piecewise-affine objective; emit JSON, a grid CSV, and
    /// a validation report.
    GenObjective(CommonArgs),
    /// Two-stage blameless-optimal solve.
    Solve(CommonArgs),
    /// Brute-force lexicographic baseline.
    Brute(CommonArgs),
    /// Run two-stage, brute-force, and pure-optimal controllers and record a
    /// comparison.
    Compare(CommonArgs),
    /// Sample the projected terminal successor cloud.
    Successor(CommonArgs),
    /// Run every invariant suite; nonzero exit on failure.
    Validate(CommonArgs),
}

type Handler = fn(&config::Scenario, &std::path::Path) -> Result<(), CliError>;

fn run() -> Result<(), CliError> {
    let cli = Cli::try_parse().map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
            print!("{e}");
            std::process::exit(0);
        }
        _ => CliError::usage(e.to_string()),
    })?;
    let (args, handler): (&CommonArgs, Handler) = match &cli.command {
        Command::GenObjective(a) => (a, commands::gen_objective),
        Command::Solve(a) => (a, commands::solve),
        Command::Brute(a) => (a, commands::brute),
        Command::Compare(a) => (a, commands::compare),
        Command::Successor(a) => (a, commands::successor),
        Command::Validate(a) => (a, commands::validate),
    };
    let config = config::load_config(&args.config)?;
    let scenario = config::build_scenario(
        &config,
        Overrides {
            seed: args.seed,
            dt: args.dt,
            horizon: args.horizon,
        },
    )?;
    std::fs::create_dir_all(&args.out)?;
    handler(&scenario, &args.out)
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let payload = serde_json::json!({
                "error": err.kind_str(),
                "message": err.message,
            });
            eprintln!("{payload}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
