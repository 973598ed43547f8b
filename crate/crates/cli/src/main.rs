//! `transport`: batch front-end for the transport solvers.

mod config;
mod pipeline;
mod study;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use transport_core::presets::{catalog, scenario, scenario_names};
use transport_core::Error;

#[derive(Parser)]
#[command(name = "transport", version, about = "Finite-difference transport solvers")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its artifacts.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config and TRANSPORT_OUTPUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence study over several resolutions.
    Study {
        config: PathBuf,
        /// Comma-separated 1/h values, e.g. 16,32,64.
        #[arg(long, value_delimiter = ',')]
        resolutions: Vec<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate a configuration without running it.
    ValidateConfig { config: PathBuf },
    /// List the built-in presets and scenarios.
    Presets,
}

/// 2 for configuration problems, 3 for solver and runtime failures, 4 for
/// numerical degeneracy.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Scaling(_) | Error::Argument(_) | Error::Parse(_) | Error::Data(_) => 2,
        Error::Degenerate { .. } | Error::Precondition(_) => 4,
        Error::Solver { .. } | Error::Domain(_) | Error::Internal(_) | Error::Io(_) => 3,
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = config::load(&config)?;
            let manifest = pipeline::run(&cfg, &cfg.output_dir(out.as_deref()))?;
            println!("{}", manifest.display());
        }
        Command::Study { config, resolutions, out } => {
            let cfg = config::load(&config)?;
            let res = if resolutions.is_empty() { cfg.study.resolutions.clone() } else { resolutions };
            let manifest = study::study(&cfg, &res, &cfg.output_dir(out.as_deref()))?;
            println!("{}", manifest.display());
        }
        Command::ValidateConfig { config } => {
            let cfg = config::load(&config)?;
            let info = pipeline::check(&cfg)?;
            println!("ok: {info}");
        }
        Command::Presets => {
            for (kind, name, what) in catalog() {
                println!("{kind:<9} {name:<10} {what}");
            }
            for name in scenario_names() {
                let sc = scenario(name)?;
                println!(
                    "{:<9} {name:<16} {} with {}, T = {}",
                    "scenario",
                    sc.velocity.name(),
                    sc.initial.name(),
                    sc.t_final
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
