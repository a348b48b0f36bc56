use std::path::PathBuf;

/// Failures surfaced by the command-line front end.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or arguments; exit status 1.
    #[error("invalid configuration: {0}")]
    Validation(String),

    /// Integration, classification or I/O failure; exit status 2.
    #[error("{0}")]
    Runtime(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) | CliError::Io { .. } => 2,
        }
    }
}

impl From<freerecall_core::Error> for CliError {
    fn from(err: freerecall_core::Error) -> Self {
        use freerecall_core::Error as E;
        match err {
            E::Domain { .. } | E::Dimension { .. } | E::Precondition(_) => {
                CliError::Validation(err.to_string())
            }
            E::Blowup { .. } | E::Classification(_) => CliError::Runtime(err.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
