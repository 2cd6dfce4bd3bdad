//! Experiment harness around `depauw-core`: configuration, the
//! `field-eval`, `solve` and `experiment` commands, and report files.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod report;

use serde::{Deserialize, Serialize};

pub use config::ExperimentConfig;
pub use experiments::{run_experiment, ExperimentName};
pub use report::{Check, ExperimentResult, RunReport, Table, Value};

/// Process exit status, ordered from best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExitStatus {
    Pass,
    AcceptanceFailure,
    Usage,
    Resource,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        match self {
            ExitStatus::Pass => 0,
            ExitStatus::AcceptanceFailure => 1,
            ExitStatus::Usage => 2,
            ExitStatus::Resource => 3,
        }
    }

    /// Exit status for an error: level-cap, window and I/O failures are
    /// resource errors, everything else is a usage error.
    pub fn of_error(err: &anyhow::Error) -> Self {
        use depauw_core::Error;
        for cause in err.chain() {
            if let Some(e) = cause.downcast_ref::<Error>() {
                return match e {
                    Error::LevelCap { .. } | Error::Window(_) | Error::Io(_) => ExitStatus::Resource,
                    _ => ExitStatus::Usage,
                };
            }
            if cause.is::<std::io::Error>() {
                return ExitStatus::Resource;
            }
        }
        ExitStatus::Usage
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn error_classification() {
        let cap: anyhow::Error = depauw_core::Error::LevelCap { time: 1e-9, max_level: 16 }.into();
        assert_eq!(ExitStatus::of_error(&cap), ExitStatus::Resource);
        let wrapped = Err::<(), _>(depauw_core::Error::InvalidInput("x".into())).context("outer").unwrap_err();
        assert_eq!(ExitStatus::of_error(&wrapped), ExitStatus::Usage);
        assert_eq!(ExitStatus::of_error(&anyhow::anyhow!("plain")), ExitStatus::Usage);
        assert!(ExitStatus::Resource > ExitStatus::AcceptanceFailure);
    }
}
