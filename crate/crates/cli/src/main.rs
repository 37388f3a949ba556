// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod verify;

use config::{Format, RunConfig, SolverConfig};
use error::CliError;

/// Radial p-Laplace laboratory for model manifolds.
#[derive(Debug, Parser)]
#[command(name = "pfeller", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decide p-hyperbolicity, p-stochastic completeness and the p-Feller
    /// property. Exit 0 when every verdict is definite, 2 when any is
    /// inconclusive.
    Classify(Common),
    /// Compute the minimal exterior solution of Δ_p h = Λ(h) with h(R) = 1.
    /// Exit 3 when the solver does not converge.
    Solve(Common),
    /// Run the property checks over a fixture set (default "core"). Exit 4
    /// when any check fails.
    Verify(Common),
    /// Write solution, analysis and classification files into a directory.
    Export(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Warping function in t, e.g. "sinh(t)".
    #[arg(long, conflicts_with = "family")]
    sigma: Option<String>,
    /// Built-in warping family: euclidean, hyperbolic(k), cusp_cubic, flare_cubic.
    #[arg(long)]
    family: Option<String>,
    /// Dimension.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    p: Option<f64>,
    /// Coefficient of Λ(u) = λ u^ξ; 0 solves the p-harmonic problem.
    #[arg(long)]
    lambda: Option<f64>,
    /// Exponent ξ of Λ (default p - 1).
    #[arg(long)]
    xi: Option<f64>,
    /// Inner radius.
    #[arg(long = "R")]
    r: Option<f64>,
    /// Output path (a directory for `export`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// JSON run configuration ("schema": 1); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        let flags = RunConfig {
            family: self.family,
            sigma: self.sigma,
            m: self.m,
            p: self.p,
            lambda: self.lambda,
            xi: self.xi,
            r: self.r,
            out: self.out,
            format: self.format,
            solver: SolverConfig::default(),
            ..Default::default()
        };
        Ok(base.overridden_by(flags))
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Classify(c) => commands::classify(&c.resolve()?),
        Command::Solve(c) => commands::solve(&c.resolve()?),
        Command::Verify(c) => verify::run(&c.resolve()?),
        Command::Export(c) => commands::export(&c.resolve()?),
    }
}

fn main() -> ExitCode {
    // Argument errors exit with 1 like every other validation error; clap's
    // own code would collide with the "inconclusive" exit code 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Solver(pfeller::radial_solver::SolverError::NonConvergence { trace, .. }) = &e {
                eprintln!("iteration trace:");
                eprintln!("{}", serde_json::to_string_pretty(trace).expect("trace serializes"));
            }
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
