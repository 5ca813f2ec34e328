//! Command-line front end: problem files, derivative tables, solves,
//! Pareto sweeps, and residual verification.
//!
//! Exit codes are a stable contract: 0 success, 2 usage/format errors,
//! 3 mathematical domain errors, 4 non-convergence.

mod commands;
mod problem_file;

pub use commands::{
    cmd_deriv, cmd_pareto, cmd_solve, cmd_verify, exit_code_for, DerivArgs, EXIT_DOMAIN,
    EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE,
};
pub use problem_file::{parse_problem_file, ProblemFile, RunParams};

use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Fractional variational calculus toolkit.
#[derive(Parser)]
#[command(name = "fracvar", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a discrete fractional operator to f(x) and emit x,f,Df CSV.
    Deriv {
        /// Expression in x, e.g. "mlf(0.5, x^0.5)".
        #[arg(long)]
        expr: String,
        /// caputo_l | caputo_r | rl_l | rl_r | rli_l | rli_r | combined.
        #[arg(long)]
        op: String,
        /// Order of the operator (integral order for rli_*).
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        /// Right-side order for the combined operator.
        #[arg(long, default_value_t = 0.5)]
        beta: f64,
        /// Combination weight for the combined operator.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Interval start.
        #[arg(long, default_value_t = 0.0)]
        a: f64,
        /// Interval end.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Grid panels.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Output CSV path.
        #[arg(long, default_value = "deriv.csv")]
        out: PathBuf,
    },
    /// Solve a problem file and write the trajectory CSV plus a report.
    Solve {
        /// Problem file path.
        file: PathBuf,
        /// 1-based objective index for multiobjective files.
        #[arg(long)]
        objective: Option<usize>,
        /// Scalarization weights w1,..,wd for multiobjective files.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Weighted-sum sweep over the unit simplex.
    Pareto {
        /// Problem file path.
        file: PathBuf,
        /// Number of weights (defaults to the file's `[run] weights`).
        #[arg(long = "weights-count")]
        weights_count: Option<usize>,
        /// Also run dominance filtering and ε-constraint verification.
        #[arg(long)]
        check: bool,
    },
    /// Verify residuals of a supplied trajectory CSV.
    Verify {
        /// Problem file path.
        file: PathBuf,
        /// Trajectory CSV (schema x,y1..yN[,v1..vN]).
        #[arg(long)]
        trajectory: PathBuf,
        /// Isoperimetric multipliers l1,..,lr for the augmented integrand
        /// F = L - sum lambda_j G^j.
        #[arg(long, value_delimiter = ',')]
        lambda: Option<Vec<f64>>,
        /// 1-based objective index for multiobjective files.
        #[arg(long)]
        objective: Option<usize>,
        /// Scalarization weights for multiobjective files.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
}

/// Parse argv and run; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match cli.command {
        Command::Deriv {
            expr,
            op,
            alpha,
            beta,
            gamma,
            a,
            b,
            n,
            out,
        } => {
            let args = DerivArgs {
                expr,
                op,
                alpha,
                beta,
                gamma,
                a,
                b,
                n,
                out,
            };
            match cmd_deriv(&args) {
                Ok(()) => EXIT_OK,
                Err(e) => report(e),
            }
        }
        Command::Solve {
            file,
            objective,
            weights,
        } => match cmd_solve(&file, objective, weights.as_deref()) {
            Ok(result) if result.converged => EXIT_OK,
            Ok(_) => {
                eprintln!("fracvar: solve did not converge");
                EXIT_NOT_CONVERGED
            }
            Err(e) => report(e),
        },
        Command::Pareto {
            file,
            weights_count,
            check,
        } => match cmd_pareto(&file, weights_count, check) {
            Ok(true) => EXIT_OK,
            Ok(false) => {
                eprintln!("fracvar: some sweep solves did not converge");
                EXIT_NOT_CONVERGED
            }
            Err(e) => report(e),
        },
        Command::Verify {
            file,
            trajectory,
            lambda,
            objective,
            weights,
        } => match cmd_verify(
            &file,
            &trajectory,
            lambda.as_deref(),
            objective,
            weights.as_deref(),
        ) {
            Ok(true) => EXIT_OK,
            Ok(false) => {
                eprintln!("fracvar: residuals exceed the configured tolerances");
                EXIT_NOT_CONVERGED
            }
            Err(e) => report(e),
        },
    }
}

fn report(e: crate::error::Error) -> i32 {
    eprintln!("fracvar: {e}");
    exit_code_for(&e)
}
