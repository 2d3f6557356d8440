//! `pmns`: command-line front end for the spectral laboratory.
//!
//! Exit codes: 0 success, 2 parameter or input errors, 3 non-convergence and
//! I/O failures, 64 unknown subcommand.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use pmns_core::PmnsError;

#[derive(Debug, Parser)]
#[command(name = "pmns", version, about = "Navier-Stokes experiments in pseudomeasure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed form, surface oracle and residual checks for the Landau family.
    LandauVerify {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        /// Surface quadrature points per angle.
        #[arg(long, default_value_t = 512)]
        quad: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Strength b(c) of the Landau force.
    Bofc {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
    },
    /// Inverse of b(c) on one branch.
    Cofb {
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, value_enum, default_value_t = BranchArg::Positive)]
        branch: BranchArg,
    },
    /// Mild solution on the configured knots.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationary solution for a time-independent force.
    Stationary {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Difference of two solutions against its linear part.
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted PM^a seminorm and L^q decay of the solution.
    Regularize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Picard runs from epsilon times the projected Landau sample.
    Scan {
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        /// Comma-separated, increasing.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Grid, knots and solver settings; defaults to an 8^3 grid.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Contraction constants and the Riesz convolution table.
    Constants,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum BranchArg {
    Positive,
    Negative,
}

pub const EXIT_PARAMETER: u8 = 2;
pub const EXIT_RUNTIME: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

fn exit_code(e: &PmnsError) -> u8 {
    match e {
        PmnsError::NonConvergence { .. } | PmnsError::StepRejected { .. } | PmnsError::Io(_) => EXIT_RUNTIME,
        _ => EXIT_PARAMETER,
    }
}

fn configure_threads() -> Result<(), PmnsError> {
    let Ok(v) = std::env::var("PMNS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| PmnsError::Parameter(format!("PMNS_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| PmnsError::Parameter(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_PARAMETER,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| run(cli.command));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<(), PmnsError> {
    use pmns_core::landau::Branch;
    match cmd {
        Command::LandauVerify { c, quad, out } => commands::landau_verify(c, quad, out),
        Command::Bofc { c } => commands::bofc(c),
        Command::Cofb { b, branch } => commands::cofb(
            b,
            match branch {
                BranchArg::Positive => Branch::Positive,
                BranchArg::Negative => Branch::Negative,
            },
        ),
        Command::Solve { config, out } => commands::solve(&config, out),
        Command::Stationary { config, out } => commands::stationary(&config, out),
        Command::Stability { config, out } => commands::stability(&config, out),
        Command::Regularize { config, a, q, out } => commands::regularize(&config, a, q, out),
        Command::Scan { c, eps, config, out } => commands::scan(c, &eps, config, out),
        Command::Constants => commands::constants(),
    }
}
