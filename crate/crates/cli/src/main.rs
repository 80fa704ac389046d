//! `parisian`: price Parisian down-and-in calls, dump knock-in densities, and
//! check the analytical engine against simulation.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid input, 3 numerical failure.

mod commands;
mod config;
mod error;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::density::Grid;
use commands::verify::Suite;
use config::RunConfig;
use error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    JsonLines,
}

#[derive(Parser)]
#[command(name = "parisian", about = "Parisian option valuation by Laplace inversion", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    config: PathBuf,
    /// Override one entry, e.g. `--set contract.window=0.1`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Write the effective configuration to this file.
    #[arg(long, value_name = "FILE")]
    dump_config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        let config = RunConfig::load(&self.config, &self.overrides)?;
        if let Some(path) = &self.dump_config {
            std::fs::write(path, config.dump())
                .map_err(|e| CliError::io(format!("cannot write `{}`", path.display()), e))?;
        }
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Price the down-and-in call.
    Price {
        #[command(flatten)]
        args: ConfigArgs,
    },
    /// Write `y,h_b` CSV of the knock-in density at one time.
    Density {
        #[command(flatten)]
        args: ConfigArgs,
        /// Time `u` at which to invert the density.
        #[arg(long)]
        time: f64,
        /// Normalized log-price grid `min:max:count`.
        #[arg(long, value_name = "MIN:MAX:COUNT", allow_hyphen_values = true)]
        y_grid: Grid,
        /// Output file; standard output if absent.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Compare analytical values with simulation.
    Verify {
        #[command(flatten)]
        args: ConfigArgs,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Print the version.
    Version,
}

fn run(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Price { args } => commands::price::run(&args.load()?, args.format, stdout),
        Command::Density {
            args,
            time,
            y_grid,
            out,
        } => commands::density::run(&args.load()?, time, y_grid, out.as_deref().map(Path::new), args.format, stdout),
        Command::Verify { args, suite } => commands::verify::run(&args.load()?, suite, args.format, stdout),
        Command::Version => writeln!(stdout, "parisian {}", env!("CARGO_PKG_VERSION"))
            .map_err(|e| CliError::io("writing the version", e)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli.command, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
