use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("{0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("cannot write to output directory {}: {source}", path.display())]
    OutputDir { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed summary {}: {reason}", path.display())]
    Summary { path: PathBuf, reason: String },
    #[error("metric mismatch: `{a}` vs `{b}`")]
    MetricMismatch { a: String, b: String },
    #[error("run {label} seed {seed} failed: {reason}")]
    Run { label: String, seed: u64, reason: String },
}

impl BenchError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Run { .. } => 1,
            Self::Parse(_) | Self::Invalid(_) => 2,
            Self::Unknown { .. } => 3,
            Self::OutputDir { .. } => 4,
            Self::Io { .. } => 5,
            Self::Summary { .. } | Self::MetricMismatch { .. } => 6,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }
}
