use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{}:{line}: malformed CSV: {message}", path.display())]
    MalformedCsv { path: PathBuf, line: u64, message: String },
    #[error("empty series in {}", .0.display())]
    EmptySeries(PathBuf),
    #[error("no trace or smoothness CSV files in {}", .0.display())]
    NothingToPlot(PathBuf),
    #[error("{0}")]
    Io(String),
    #[error("{algorithm}, c = {c}, run seed {run_seed}: {source}")]
    Run { algorithm: String, c: usize, run_seed: u64, source: pvtune_core::Error },
    #[error(transparent)]
    Core(#[from] pvtune_core::Error),
    #[error("interrupted; {completed} of {total} runs completed and written")]
    Interrupted { completed: usize, total: usize },
}
