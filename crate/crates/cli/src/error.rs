use std::path::PathBuf;

use thiserror::Error;

/// Exit code for a run whose checks did not all pass.
pub const EXIT_VERIFICATION: i32 = 2;
/// Exit code for malformed input, I/O problems and incompatible comparisons.
pub const EXIT_INPUT: i32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}:{line}:{column}: parse error: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}:{}: validation error in `{field}`: {message}", line.map_or_else(|| "-".to_string(), |l| l.to_string()))]
    Validation {
        path: String,
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("incompatible grids in {file}: {reason}")]
    IncompatibleGrids { file: String, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    /// A solver rejected its parameters.
    #[error("scenario `{scenario}`: {message}")]
    Rejected { scenario: String, message: String },
    /// A solver ran but failed numerically.
    #[error("scenario `{scenario}`: {message}")]
    Numerical { scenario: String, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => EXIT_VERIFICATION,
            _ => EXIT_INPUT,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Sorts a core failure into parameter trouble or numerical failure.
    pub fn from_core(scenario: &str, err: rdd_core::Error) -> Self {
        use rdd_core::Error as E;
        let message = err.to_string();
        let scenario = scenario.to_string();
        match err {
            E::InvalidDensity { .. }
            | E::InvalidParameter(_)
            | E::NegativeCoefficient { .. }
            | E::NotDeltaCase
            | E::DegenerateTime { .. }
            | E::VacuumDivision { .. }
            | E::InsufficientData { .. }
            | E::GridTooCoarse { .. }
            | E::StabilityViolation { .. } => CliError::Rejected { scenario, message },
            _ => CliError::Numerical { scenario, message },
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
