//! `hypercqed`: run configured computations and reproduce the bundled figure datasets.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod figures;
mod run;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::figures::Figure;
use crate::run::{execute, resolve_output};

#[derive(Parser)]
#[command(name = "hypercqed", version, about = "Qubits coupled to photons on hyperbolic lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides HYPERCQED_OUTPUT_DIR and the configured path.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Treat warnings as errors.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the single task described by a TOML configuration.
    Run { config: PathBuf },
    /// Regenerate the data behind one figure and check it against its thresholds.
    Reproduce {
        #[arg(value_enum)]
        figure: Figure,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!("{}", serde_json::json!({ "error": { "kind": "usage", "message": msg.trim() } }));
            return ExitCode::from(2);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    match &cli.command {
        Command::Run { config } => {
            let config = RunConfig::load(config)?;
            let dir = resolve_output(cli.output_dir.as_deref(), &config.output);
            let (_, manifest) = execute(&config, &dir, cli.strict)?;
            println!("{}", serde_json::json!({ "task": manifest.task, "output_dir": dir, "files": manifest.files.len() }));
        }
        Command::Reproduce { figure } => {
            let base = resolve_output(cli.output_dir.as_deref(), Path::new("output"));
            let checks = figures::reproduce(*figure, &base, cli.strict)?;
            println!("{}", serde_json::json!({ "figure": figure.name(), "pass": true, "checks": checks.len() }));
        }
    }
    Ok(())
}
