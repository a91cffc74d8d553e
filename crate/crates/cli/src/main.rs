//! `ma-lab`: deterministic multiple-access / beamforming / ISAC experiment
//! runner. See `ma-lab list` for the available experiments.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ma_lab::config;
use ma_lab::experiments::{self, RunError};
use ma_lab::table::Format;

/// Exit code for invalid configuration input.
const EXIT_CONFIG: u8 = 2;
/// Exit code for a numerical failure inside an experiment.
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ma-lab", version, about = "Deterministic multiple-access, beamforming, and ISAC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON config file.
    Run {
        /// Path to the JSON config.
        config: PathBuf,
        /// Write the table here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format.
        #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
        format: OutFormat,
        /// Override the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker thread count (results are identical for any count).
        #[arg(long, default_value_t = 1)]
        threads: usize,
    },
    /// List all registered experiments.
    List,
    /// Validate a config file, reporting every violation.
    Validate {
        /// Path to the JSON config.
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for exp in experiments::registry() {
                println!("{:<28} {}", exp.name, exp.description);
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => {
            let root = match config::load(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let errors = experiments::validate_config(&root);
            if errors.is_empty() {
                println!("ok");
                ExitCode::SUCCESS
            } else {
                eprintln!("configuration is invalid:");
                for e in &errors {
                    eprintln!("  - {e}");
                }
                ExitCode::from(EXIT_CONFIG)
            }
        }
        Command::Run {
            config,
            out,
            format,
            seed,
            threads,
        } => {
            let root = match config::load(&config) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(EXIT_CONFIG);
                }
            };
            let table = match experiments::run(&root, seed, threads) {
                Ok(t) => t,
                Err(e) => {
                    let code = match e {
                        RunError::Config(_) => EXIT_CONFIG,
                        RunError::Core(_) => EXIT_NUMERICAL,
                    };
                    eprintln!("error: {e}");
                    return ExitCode::from(code);
                }
            };
            let rendered = table.render(match format {
                OutFormat::Csv => Format::Csv,
                OutFormat::Json => Format::Json,
            });
            match out {
                Some(path) => {
                    if let Err(e) = std::fs::write(&path, rendered) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::FAILURE;
                    }
                }
                None => {
                    if std::io::stdout().write_all(rendered.as_bytes()).is_err() {
                        return ExitCode::FAILURE;
                    }
                }
            }
            ExitCode::SUCCESS
        }
    }
}
