use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("write failed: {0}")]
    Write(#[from] std::io::Error),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] cphase_core::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
/// `dd verify` on a sequence that does not refocus.
pub const EXIT_NOT_REFOCUSED: i32 = 3;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cphase_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Io { .. } => EXIT_VALIDATION,
            CliError::Write(_) | CliError::Csv(_) | CliError::Json(_) => EXIT_NUMERICAL,
            CliError::Core(e) => match e {
                E::InvalidParameter { .. }
                | E::Coverage(_)
                | E::GridMismatch(_)
                | E::UnsupportedBlockedSet(_)
                | E::QubitCount { .. } => EXIT_VALIDATION,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}
