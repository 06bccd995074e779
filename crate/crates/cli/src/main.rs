//! `thinlab`: validate problem configurations, solve single trajectories and
//! run epsilon sweeps, writing one audited run directory per invocation.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinlab_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "thinlab",
    version,
    about = "p-Laplacian evolution on thin domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the problem hypotheses.
    Validate(commands::ValidateArgs),
    /// Integrate one trajectory and write its log, final state and summary.
    Solve(commands::SolveArgs),
    /// Compare sampled attractors across a list of epsilon values.
    Sweep(commands::SweepArgs),
}

pub const EXIT_HYPOTHESIS: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Hypotheses(_)
        | Error::InvalidExponent(_)
        | Error::ChooseSmallerEta { .. }
        | Error::DegenerateMesh(_)
        | Error::EmptyEnsemble => EXIT_HYPOTHESIS,
        Error::NonlinearSolveFailure { .. }
        | Error::NoAbsorption { .. }
        | Error::EmptySample
        | Error::WindowOutOfRange { .. } => EXIT_SOLVER,
        Error::ConfigParse(_)
        | Error::UnknownProblem(_)
        | Error::InvalidParameter(_)
        | Error::MeshMismatch
        | Error::Checkpoint(_)
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_IO,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let code = e.downcast_ref::<Error>().map_or(EXIT_IO, exit_code);
        Failure { code, error: e }
    }
}

fn report(f: &Failure) {
    if let Some(Error::Hypotheses(list)) = f.error.downcast_ref::<Error>() {
        eprintln!("hypothesis check failed:");
        for v in list {
            eprintln!("  {v}");
        }
        return;
    }
    eprintln!("error: {:#}", f.error);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = match &cli.command {
        Command::Validate(a) => a.common.workers,
        Command::Solve(a) => a.common.workers,
        Command::Sweep(a) => a.common.workers,
    };
    if let Some(n) = workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
        {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(EXIT_IO);
        }
    }
    let result = match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Solve(a) => commands::solve(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(code) => {
            if code != 0 {
                eprintln!("assertion suite failed; see manifest.json");
            }
            ExitCode::from(code)
        }
        Err(f) => {
            report(&f);
            ExitCode::from(f.code)
        }
    }
}
