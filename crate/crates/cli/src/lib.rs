//! The `bolax` command line: argument parsing, configuration, and the five commands.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::{run, Outcome};
pub use config::{ExperimentConfig, Overrides};

pub const EXIT_PASS: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 2;
pub const EXIT_CONFIG: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    /// A mathematical condition or check failed.
    #[error("check failed: {0}")]
    Check(String),
    /// The numerics gave up: self-checks, blow-up, unconverged solvers.
    #[error("numerical abort: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// Sorts a library error by what went wrong.
    pub fn module(context: &str, e: bolax_core::Error) -> Self {
        use bolax_core::Error as E;
        let msg = format!("{context}: {e}");
        if e.is_numerical_abort() {
            CliError::Numerical(msg)
        } else if matches!(e, E::Smallness(_) | E::NoTrapping { .. }) {
            CliError::Check(msg)
        } else {
            CliError::Config(msg)
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Check(_) => EXIT_CHECK_FAILED,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bolax", version, about = "Lax-structure diagnostics for the periodic Benjamin-Ono equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Geometric constants c1, c2, x_max and A_max.
    Constants(CommonArgs),
    /// The full verification suite.
    Verify(CommonArgs),
    /// Evolve the configured flow and record invariants.
    Simulate(CommonArgs),
    /// Regularized flows against BO over a sweep of kappa.
    Converge(CommonArgs),
    /// Trapping experiment for a small initial state.
    Trap(CommonArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Constants(_) => "constants",
            Command::Verify(_) => "verify",
            Command::Simulate(_) => "simulate",
            Command::Converge(_) => "converge",
            Command::Trap(_) => "trap",
        }
    }

    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Constants(a)
            | Command::Verify(a)
            | Command::Simulate(a)
            | Command::Converge(a)
            | Command::Trap(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON experiment file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (else `output_dir` in the file, then $BOLAX_OUT, then ./bolax-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    #[arg(long = "n-max")]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// Repeatable; replaces the kappa sweep (the last value also sets an H_kappa flow).
    #[arg(long = "kappa")]
    pub kappa: Vec<f64>,
}

impl CommonArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            dt: self.dt,
            t_end: self.t_end,
            n_max: self.n_max,
            rho: self.rho,
            kappa: self.kappa.clone(),
        }
    }
}

/// Parses `args`, runs the command and reports on stdout/stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli.command) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code)
        }
        Err(e) => {
            eprintln!("bolax {}: {e}", cli.command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
