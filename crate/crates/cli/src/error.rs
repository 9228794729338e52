use thiserror::Error;

/// Failures of a CLI run, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments or manifest; `key` names the offending parameter.
    #[error("{message}")]
    Invalid { key: Option<String>, message: String },
    /// The run would exceed an enumeration or search limit.
    #[error("{0}")]
    Resource(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid {
            key: Some(key.into()),
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid { .. } => 2,
            CliError::Resource(_) => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

impl From<phasest::Error> for CliError {
    fn from(e: phasest::Error) -> Self {
        match e {
            phasest::Error::Resource(m) => CliError::Resource(m),
            other => CliError::Invalid {
                key: None,
                message: other.to_string(),
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
