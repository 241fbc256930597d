//! `vibcoh` — propagate the two-state vibronic coherence in phase space and
//! extract correlation functions, spectra, and cross-channel comparisons.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 validation failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
            CliError::Validation(_) => 4,
        }
    }
}

impl From<vibcoh::ChannelError> for CliError {
    fn from(e: vibcoh::ChannelError) -> Self {
        match e {
            vibcoh::ChannelError::UnsupportedMethod { .. }
            | vibcoh::ChannelError::MissingGridSpec { .. } => CliError::Config(e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "vibcoh",
    version,
    about = "Phase-space dynamics of a two-state vibronic coherence: exact Moyal evolution, semiclassical limits, spectra"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonOpts {
    /// Run configuration (TOML; `.json` accepted). Defaults are the
    /// reference parameter set.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Equation of motion: moyal | sc | sc-linearized
    #[arg(long)]
    method: Option<String>,
    /// With `--method sc` (or semiclassical), linearize the difference
    /// potential around the initial center.
    #[arg(long)]
    linearized: bool,
    /// Computation channel(s): gaussian | grid | oracle (comma separated)
    #[arg(long, value_delimiter = ',')]
    channel: Vec<String>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sample spacing of c(t) (atomic time)
    #[arg(long)]
    dt: Option<f64>,
    /// Number of sample steps (sets total time = dt * steps)
    #[arg(long)]
    steps: Option<usize>,
    /// Spectrum window: rect | hann
    #[arg(long)]
    window: Option<String>,
    /// Exponential damping time for the spectrum
    #[arg(long)]
    tau: Option<f64>,
    /// Zero-padding factor for the spectrum
    #[arg(long = "zero-pad")]
    zero_pad: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the configured channels and write the artifact bundle
    Run(CommonOpts),
    /// Run several channel specs (`channel[:method]`) and report pairwise
    /// discrepancies
    Compare {
        #[command(flatten)]
        common: CommonOpts,
        /// Channel specs, e.g. `gaussian,oracle` or `gaussian:moyal,gaussian:sc`
        #[arg(long = "channels", value_delimiter = ',', required = true)]
        specs: Vec<String>,
    },
    /// Run the built-in invariant suite and print a pass/fail table
    Validate,
    /// Recompute a spectrum from an existing c(t) CSV
    Spectrum {
        #[command(flatten)]
        common: CommonOpts,
        /// Input CSV with columns `t,Re c,Im c[,abs c]`
        input: PathBuf,
    },
}

fn load_config(opts: &CommonOpts) -> Result<RunConfig, CliError> {
    let mut cfg = match &opts.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        method: opts.method.clone(),
        linearized: opts.linearized,
        channels: opts.channel.clone(),
        out: opts.out.as_ref().map(|p| p.display().to_string()),
        dt: opts.dt,
        steps: opts.steps,
        window: opts.window.clone(),
        tau: opts.tau,
        zero_pad: opts.zero_pad,
    });
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(opts) => commands::run(&load_config(&opts)?),
        Command::Compare { common, specs } => commands::compare(&load_config(&common)?, &specs),
        Command::Validate => commands::validate(),
        Command::Spectrum { common, input } => {
            commands::recompute_spectrum(&load_config(&common)?, &input)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // machine-readable record on stderr
            eprintln!(
                "{}",
                serde_json::json!({
                    "error": {
                        "kind": e.kind(),
                        "message": e.to_string(),
                        "exit_code": e.exit_code(),
                    }
                })
            );
            ExitCode::from(e.exit_code())
        }
    }
}
