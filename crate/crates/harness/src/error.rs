use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("bad dispersion spec {text:?}: {reason}")]
    SpecSyntax { text: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}, line {line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{0}: one or more checks failed")]
    ChecksFailed(String),
    #[error(transparent)]
    Core(#[from] disperse_core::Error),
}

impl HarnessError {
    /// 2 for anything the caller can fix by changing the invocation, 1 for
    /// failures while running.
    pub fn exit_code(&self) -> i32 {
        use disperse_core::Error as E;
        match self {
            Self::Usage(_) | Self::Config(_) | Self::SpecSyntax { .. } | Self::Json { .. } => 2,
            Self::Core(E::Class(_) | E::InvalidParams(_) | E::Config(_) | E::BadEps(_)) => 2,
            Self::Core(E::NetTooLarge { .. }) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
