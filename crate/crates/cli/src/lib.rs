//! Batch driver for the `relhf` solver: config parsing, the `solve`,
//! `verify`, `greens` and `sweep` pipelines and their output files.

pub mod config;
pub mod output;
pub mod run;

pub use config::RunConfig;
pub use run::{run_greens, run_solve, run_sweep, run_verify};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] relhf::Error),

    #[error("verification failed: {}", .0.join(", "))]
    SuitesFailed(Vec<String>),
}

impl CliError {
    /// 1 for configuration and input problems, 2 when the SCF did not
    /// converge, 3 when a certificate or verification suite failed.
    pub fn exit_code(&self) -> i32 {
        use relhf::Error as E;
        match self {
            CliError::Core(E::NotConverged(_)) => 2,
            CliError::Core(
                E::CertificateFailure { .. }
                | E::WindowTooNoisy(_)
                | E::BoundViolated { .. }
                | E::LowerBoundViolated { .. },
            ) => 3,
            CliError::SuitesFailed(_) => 3,
            _ => 1,
        }
    }
}
