use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config file {0} does not exist")]
    MissingConfig(PathBuf),

    #[error("config line {line}: expected `key = value`, got {text:?}")]
    ConfigSyntax { line: usize, text: String },

    #[error("unknown key `{key}` for {command}")]
    UnknownKey { key: String, command: String },

    #[error("bad value {value:?} for `{key}`: expected {expected}")]
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },

    #[error("output directory {0} is not empty; pass --force to reuse it")]
    OutputExists(PathBuf),

    #[error(transparent)]
    Core(#[from] chenlee::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

/// Exit status for a run whose pass criteria did not hold.
pub const EXIT_CRITERIA: u8 = 1;
pub const EXIT_PRECONDITION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_IO: u8 = 4;

impl CliError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_)
            | CliError::MissingConfig(_)
            | CliError::ConfigSyntax { .. }
            | CliError::UnknownKey { .. }
            | CliError::BadValue { .. } => EXIT_PRECONDITION,
            CliError::OutputExists(_) | CliError::Io { .. } => EXIT_IO,
            CliError::Core(e) => match e {
                chenlee::Error::Io(_) | chenlee::Error::Parse { .. } => EXIT_IO,
                e if e.is_precondition() => EXIT_PRECONDITION,
                _ => EXIT_NUMERICAL,
            },
        }
    }

    /// Short machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::MissingConfig(_) => "missing_config",
            CliError::ConfigSyntax { .. } => "config_syntax",
            CliError::UnknownKey { .. } => "unknown_key",
            CliError::BadValue { .. } => "bad_value",
            CliError::OutputExists(_) => "output_exists",
            CliError::Io { .. } => "io",
            CliError::Core(e) => match e {
                chenlee::Error::InvalidParameter(_) => "invalid_parameter",
                chenlee::Error::Precondition(_) => "precondition",
                chenlee::Error::Aliasing { .. } => "aliasing",
                chenlee::Error::ModeMismatch { .. } => "mode_mismatch",
                chenlee::Error::GridMismatch => "grid_mismatch",
                chenlee::Error::NotConverged(_) => "not_converged",
                chenlee::Error::Unstable { .. } => "unstable",
                chenlee::Error::DegenerateFit { .. } => "degenerate_fit",
                chenlee::Error::Parse { .. } => "parse",
                chenlee::Error::Io(_) => "io",
            },
        }
    }
}
