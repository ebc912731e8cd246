use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;
use relhf_cli::{run_greens, run_solve, run_sweep, run_verify, CliError, RunConfig};

/// Pseudorelativistic Hartree-Fock for atoms.
///
/// Exit status: 0 success, 1 configuration error, 2 SCF not converged,
/// 3 certificate or verification failure. The thread count is taken from
/// RELHF_THREADS when set.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write report.json, orbitals.csv and energy_trace.csv.
    Solve { config: PathBuf },
    /// Run the enabled verification suites and write verify.json.
    Verify { config: PathBuf },
    /// Tabulate the Green's kernel and check the resolvent.
    Greens { config: PathBuf },
    /// Total energy over electron numbers 1..=binding_max_electrons.
    Sweep { config: PathBuf },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(value) = std::env::var("RELHF_THREADS") {
        let n: usize = value
            .parse()
            .map_err(|_| CliError::Config(format!("RELHF_THREADS = `{value}` is not a thread count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| {
        let (path, run): (&PathBuf, fn(&RunConfig) -> Result<(), CliError>) = match &cli.command {
            Command::Solve { config } => (config, run_solve),
            Command::Verify { config } => (config, run_verify),
            Command::Greens { config } => (config, run_greens),
            Command::Sweep { config } => (config, run_sweep),
        };
        let config = RunConfig::load(path)?;
        run(&config)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
