use std::path::PathBuf;

use pfeller::analysis::AnalysisError;
use pfeller::classify::ClassifyError;
use pfeller::radial_solver::SolverError;
use pfeller::warping::WarpingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {source}")]
    ConfigJson { path: PathBuf, source: serde_json::Error },
    #[error("no fixtures")]
    NoFixtures,
    #[error(transparent)]
    Warping(#[from] WarpingError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

impl CliError {
    /// Process exit code: 3 for a solver that did not converge, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Solver(SolverError::NonConvergence { .. }) => 3,
            _ => 1,
        }
    }
}
