use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] soilradar::Error),
}

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status: 2 config or parse error, 3 insufficient data,
    /// 4 non-convergence, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use soilradar::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                E::UnderDetermined { .. } => 3,
                E::NonConvergence { .. } | E::NotConverged => 4,
                E::InvalidConfig(_) | E::Domain(_) | E::ConfigMismatch(_) | E::Aliased { .. } => 2,
                E::TotalInternalReflection { .. } | E::Geometry(_) | E::NoDetection(_) => 1,
            },
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
