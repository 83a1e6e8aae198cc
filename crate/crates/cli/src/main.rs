use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod verify;

use config::{CommonArgs, ExtraArgs, FormatArg, Resolved};
use error::CliError;

/// Multiparameter field estimation with dephased spin ensembles.
#[derive(Debug, Parser)]
#[command(name = "dmetro", version)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    /// Log progress to stderr (-v info, -vv debug); RUST_LOG overrides
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Block structure of the Dicke space for N spins
    SpaceInfo,
    /// Evolve a probe to time --t and report moments, purity and the QFIM
    Evolve(#[command(flatten)] ExtraArgs),
    /// Information bound I(t) over the time grid and its optimum
    SweepTime(#[command(flatten)] ExtraArgs),
    /// Optimal time and minimal bound for every N in --n-list
    ScanN(#[command(flatten)] ExtraArgs),
    /// Power-law fits of a scan-n table
    Fit(#[command(flatten)] ExtraArgs),
    /// Husimi Q function of a probe state
    Husimi(#[command(flatten)] ExtraArgs),
    /// Numerical self-checks
    Verify(#[command(flatten)] ExtraArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let none = ExtraArgs::default();
    let (name, extra, format): (&str, &ExtraArgs, FormatArg) = match &cli.command {
        Command::SpaceInfo => ("space-info", &none, FormatArg::Csv),
        Command::Evolve(e) => ("evolve", e, FormatArg::Json),
        Command::SweepTime(e) => ("sweep-time", e, FormatArg::Csv),
        Command::ScanN(e) => ("scan-n", e, FormatArg::Csv),
        Command::Fit(e) => ("fit", e, FormatArg::Json),
        Command::Husimi(e) => ("husimi", e, FormatArg::Csv),
        Command::Verify(e) => ("verify", e, FormatArg::Csv),
    };
    let resolved = Resolved::build(name, &cli.common, extra, format)?;
    log::debug!("resolved config {}", resolved.to_json());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| match cli.command {
        Command::SpaceInfo => commands::space_info(&resolved),
        Command::Evolve(_) => commands::evolve(&resolved),
        Command::SweepTime(_) => commands::sweep(&resolved),
        Command::ScanN(_) => commands::scan(&resolved),
        Command::Fit(_) => commands::fit(&resolved),
        Command::Husimi(_) => commands::husimi(&resolved),
        Command::Verify(_) => verify::verify(&resolved),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
