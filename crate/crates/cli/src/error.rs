use std::fmt;

use solvency_core::cart::CartError;
use solvency_core::dataset::DatasetError;
use solvency_core::eval::EvalError;
use solvency_core::screening::ScreeningError;
use solvency_core::synth::SynthError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// An error with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    pub fn context(mut self, what: &str) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::MissingFile(_) => CliError::config(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<ScreeningError> for CliError {
    fn from(e: ScreeningError) -> Self {
        match e {
            ScreeningError::Data(d) => d.into(),
            ScreeningError::Csv(_) | ScreeningError::Io(_) | ScreeningError::Malformed(_) | ScreeningError::Shape(_) => {
                CliError::data(e.to_string())
            }
            ScreeningError::Singular { .. }
            | ScreeningError::TooFewRows { .. }
            | ScreeningError::ZeroVariance(_)
            | ScreeningError::Domain(_) => CliError::numeric(e.to_string()),
        }
    }
}

impl From<CartError> for CliError {
    fn from(e: CartError) -> Self {
        match e {
            CartError::InvalidConfig(_) => CliError::config(e.to_string()),
            CartError::Data(d) => d.into(),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Domain(_) => CliError::numeric(e.to_string()),
            _ => CliError::data(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidSpec(_) => CliError::config(e.to_string()),
            SynthError::Data(d) => d.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(format!("io error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::data(format!("csv error: {e}"))
    }
}
