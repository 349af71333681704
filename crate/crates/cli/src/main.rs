#![allow(clippy::neg_cmp_op_on_partial_ord)]

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

mod commands;
mod config;
mod output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] sweetspot::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(sweetspot::Error::Io(_)) | CliError::Io(_) => 1,
            CliError::Core(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "sweetspot",
    version,
    about = "Sweet-spot singlet-triplet qubit gate simulations"
)]
struct Cli {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Locate the sweet spot and report the eigensystem there.
    Tss,
    /// Energy levels over a detuning range.
    Spectrum,
    /// Filter functions of all catalog gates.
    FilterFn,
    /// Filter-function fidelities of the sixteen catalog gates.
    Fig4,
    /// Three-level propagation of a single x pulse.
    Leakage,
    /// One 1/f noise trace.
    NoiseGen,
    /// Two-qubit entangler populations and noise sweep.
    Fig5,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut cfg = config::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    let ctx = output::Context::new(&cfg, &cli.out);
    match cli.command {
        Command::Tss => commands::tss(&cfg, &ctx),
        Command::Spectrum => commands::spectrum(&cfg, &ctx),
        Command::FilterFn => commands::filter_fn(&cfg, &ctx),
        Command::Fig4 => commands::fig4(&cfg, &ctx),
        Command::Leakage => commands::leakage(&cfg, &ctx),
        Command::NoiseGen => commands::noise_gen(&cfg, &ctx),
        Command::Fig5 => commands::fig5(&cfg, &ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
