//! Scenario runner for `spinprobe`: config parsing, figure presets and
//! deterministic CSV / report output.

pub mod config;
pub mod output;
pub mod scenario;

pub use config::{Mode, ScenarioConfig};
pub use scenario::{constants_report, run, RunManifest};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] spinprobe::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
