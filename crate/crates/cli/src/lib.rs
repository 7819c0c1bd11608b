//! Experiment harness for the space-time MHD solver: configuration,
//! parameter sweeps and CSV reports.

pub mod config;
pub mod report;
pub mod sweep;

pub use config::{ExperimentConfig, Mode};
pub use report::{emit_csv, format_sig, write_csv, HEADER};
pub use sweep::{run_sweep, ResultRow, RowMode, Status};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) => m.clone(),
            other => other.to_string(),
        }
    }
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const NOT_CONVERGED: i32 = 2;
}
