use std::io;

use thiserror::Error;

/// Failure of a CLI command, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("infeasible selection: {0}")]
    Infeasible(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io { .. } => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

impl From<cogradar::Error> for CliError {
    fn from(e: cogradar::Error) -> Self {
        use cogradar::Error as E;
        match e {
            E::Domain(m) | E::Parse(m) => CliError::Config(m),
            E::TooLarge(m) => CliError::Config(m),
            E::Infeasible(m) => CliError::Infeasible(m),
            E::Consistency(m) | E::Estimation(m) | E::NotFound(m) => CliError::Numerical(m),
            E::Io(e) => CliError::Io { path: "<stream>".into(), source: e },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
