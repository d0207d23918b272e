//! Config-driven experiment runner for `kerrchain-core`.

pub mod config;
pub mod output;
pub mod scenarios;

pub use config::{ExperimentConfig, Scenario};
pub use output::Outputs;
pub use scenarios::run;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("physics error: {0}")]
    Physics(kerrchain_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<kerrchain_core::Error> for CliError {
    fn from(e: kerrchain_core::Error) -> Self {
        match e {
            kerrchain_core::Error::InvalidParameter(m) => CliError::Config(m),
            other => CliError::Physics(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Physics(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}
