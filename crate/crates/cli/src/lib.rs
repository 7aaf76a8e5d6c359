//! Config-driven experiment runner for the modulated-interface toolkit.

pub mod config;
pub mod output;
pub mod scenario;

pub use config::{parse_config, ExperimentConfig};
pub use output::{read_csv, write_csv, write_outputs, Table};
pub use scenario::{run_scenario, Check, Options, Report, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("config line {line}: {message}")]
    ConfigAt { line: usize, message: String },
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Model(#[from] modint::Error),
}

impl CliError {
    /// Errors caused by the user's input rather than by a run.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            CliError::Config(_) | CliError::ConfigAt { .. } | CliError::Model(modint::Error::Config(_))
                | CliError::Model(modint::Error::ConfigAt { .. })
        )
    }
}
