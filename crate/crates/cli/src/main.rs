use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plantutor_cli::{check, export, gen, CliError, GenMode, GenOptions, Verdict};
use plantutor_core::curriculum::DEFAULT_MAX_DEPTH;
use plantutor_server::{serve, ServerConfig};
use tracing_subscriber::EnvFilter;

#[derive(Debug, Parser)]
#[command(name = "plantutor", version, about = "Interactive task-planning tutor")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        /// TOML configuration; PLANTUTOR_* variables override it.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Validate a plan file. Exit 0 solved, 1 valid but goal not reached,
    /// 2 invalid plan or unreadable input.
    Check {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Generate a practice task and print its goal atoms.
    Gen {
        domain: PathBuf,
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "adaptive")]
        mode: GenMode,
        #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
        depth: usize,
        /// Seed for random mode.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON object of schema scores for adaptive mode; unlisted schemas are unknown.
        #[arg(long)]
        costs_file: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Write per-task solve times and hint counts as CSV to stdout.
    Export {
        #[arg(long, default_value = "data")]
        data_dir: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
enum MainError {
    #[error(transparent)]
    Cli(#[from] CliError),
    #[error(transparent)]
    Config(#[from] plantutor_server::ConfigError),
    #[error(transparent)]
    Serve(#[from] plantutor_server::ServeError),
    #[error("{0}")]
    Io(#[from] io::Error),
}

fn run(cli: Cli) -> Result<ExitCode, MainError> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Serve { config } => {
            let config = ServerConfig::load(config.as_deref())?;
            let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
            runtime.block_on(serve(config))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            domain,
            problem,
            plan,
            json,
        } => {
            let report = check(&domain, &problem, &plan)?;
            if json {
                serde_json::to_writer_pretty(&mut stdout, &report).map_err(io::Error::other)?;
                writeln!(stdout)?;
            } else {
                report.write_text(&mut stdout)?;
            }
            Ok(ExitCode::from(report.verdict().exit_code()))
        }
        Command::Gen {
            domain,
            problem,
            mode,
            depth,
            seed,
            costs_file,
            json,
        } => {
            let opts = GenOptions {
                mode,
                depth,
                seed,
                costs_file: costs_file.as_deref(),
            };
            let report = gen(&domain, &problem, &opts)?;
            if json {
                serde_json::to_writer_pretty(&mut stdout, &report).map_err(io::Error::other)?;
                writeln!(stdout)?;
            } else {
                report.write_text(&mut stdout)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { data_dir } => {
            export(&data_dir, &mut stdout)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Verdict::Invalid.exit_code())
        }
    }
}
