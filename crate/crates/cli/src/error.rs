use std::path::PathBuf;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const MISSING_TABLE: i32 = 3;
    pub const INFEASIBLE: i32 = 4;
    pub const ESTIMATOR: i32 = 5;
    pub const IO: i32 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("no {metric} table for device `{device}` in {}", dir.display())]
    MissingTable { metric: String, device: String, dir: PathBuf },
    #[error("search is infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Estimator(actnas_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(actnas_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use actnas_core::Error as E;
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::MissingTable { .. } => exit::MISSING_TABLE,
            CliError::Infeasible(_) => exit::INFEASIBLE,
            CliError::Estimator(_) => exit::ESTIMATOR,
            CliError::Io { .. } => exit::IO,
            CliError::Core(e) => match e {
                E::NoSolution => exit::INFEASIBLE,
                E::MissingMatrix { .. } => exit::MISSING_TABLE,
                E::Estimator { .. } => exit::ESTIMATOR,
                E::Io(_) => exit::IO,
                _ => exit::CONFIG,
            },
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<actnas_core::Error> for CliError {
    fn from(e: actnas_core::Error) -> Self {
        match e {
            actnas_core::Error::NoSolution => CliError::Infeasible("no assignment satisfies the budget".into()),
            e @ actnas_core::Error::Estimator { .. } => CliError::Estimator(e),
            e => CliError::Core(e),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
