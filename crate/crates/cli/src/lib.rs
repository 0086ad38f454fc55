//! Config-driven experiment pipeline: generate, reduce, train, predict and
//! report, each reading the previous stage's files from one run directory.

pub mod config;
pub mod pipeline;
pub mod tables;

use std::path::PathBuf;

pub use config::{ExperimentConfig, Family, Overrides, PerNoise, Resolved};
pub use pipeline::{Layout, Run};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("{}: {err}", path.display())]
    Io { path: PathBuf, err: std::io::Error },

    #[error("{}: {err}", path.display())]
    Csv { path: PathBuf, err: csv::Error },

    #[error("{}: {detail}", path.display())]
    Table { path: PathBuf, detail: String },

    #[error("missing {what} at {} (run `{stage}` first)", path.display())]
    Missing {
        what: &'static str,
        stage: &'static str,
        path: PathBuf,
    },

    #[error(transparent)]
    Core(#[from] pcfml::error::Error),

    #[error("stage {stage} failed for {family}: {source}")]
    Family {
        stage: &'static str,
        family: Family,
        #[source]
        source: Box<CliError>,
    },
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        CliError::Io { path: path.into(), err }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, err: csv::Error) -> Self {
        CliError::Csv { path: path.into(), err }
    }

    pub(crate) fn table(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        CliError::Table {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
