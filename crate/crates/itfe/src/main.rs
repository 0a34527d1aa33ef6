use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use itfe::commands::{cmd_report, cmd_solve, cmd_validate, SolveArgs, EXIT_CONFIG};
use itfe::problem::Overrides;

/// Fixed-point solver for phi(phi(x)) = h(phi(f(x))) + g(x).
#[derive(Parser)]
#[command(name = "itfe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the solvability conditions and print the report as JSON.
    Validate { path: PathBuf },
    /// Solve from the zero seed and write phi, Phi and a run summary.
    Solve {
        path: PathBuf,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        grid_n: Option<usize>,
        /// Half-width A of the computational interval.
        #[arg(long)]
        interval: Option<f64>,
        #[arg(long = "L")]
        l: Option<f64>,
        #[arg(long)]
        rho: Option<f64>,
        /// Write the per-iteration trace CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Prefix of the output files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the JSON artifacts of earlier runs.
    Report {
        path: PathBuf,
        /// Re-emit the documents as JSON instead of tables.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = match cli.command {
        Command::Validate { path } => cmd_validate(&path, &mut out, &mut err),
        Command::Solve {
            path,
            tol,
            max_iter,
            grid_n,
            interval,
            l,
            rho,
            trace,
            out: prefix,
        } => {
            let args = SolveArgs {
                path,
                overrides: Overrides {
                    tol,
                    max_iter,
                    grid_n,
                    interval,
                    l,
                    rho,
                },
                trace,
                out: prefix,
            };
            cmd_solve(&args, &mut out, &mut err)
        }
        Command::Report { path, json } => cmd_report(&path, json, &mut out, &mut err),
    };
    ExitCode::from(code as u8)
}
