use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] glogex_core::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}{}: {msg}", path.display(), line.map(|l| format!(":{l}")).unwrap_or_default())]
    Format {
        path: PathBuf,
        /// 1-based line for JSONL inputs.
        line: Option<usize>,
        msg: String,
    },
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("stage-version mismatch in {artifact}: {msg}")]
    StageMismatch { artifact: String, msg: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable kind used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "core",
            Error::Io { .. } => "io",
            Error::Format { .. } => "format",
            Error::MissingArtifact(_) => "missing_artifact",
            Error::StageMismatch { .. } => "stage_mismatch",
            Error::Config(_) => "config",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, line: Option<usize>, msg: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            line,
            msg: msg.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
