use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the pipeline.
///
/// `Config` covers anything a user can fix by editing the configuration or
/// the invocation (bad parameters, infeasible splits, shape mismatches
/// between declared and provided data). `Io`/`Format` cover runtime problems
/// with files on disk. `Numeric` covers genuine numerical failures such as a
/// degenerate affinity graph.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or arguments; the caller can fix the input.
    #[error("config: {0}")]
    Config(String),

    /// Underlying filesystem failure.
    #[error("io: {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed on-disk data (CSV/JSON that does not match the schema).
    #[error("format: {0}")]
    Format(String),

    /// Numerical failure (degenerate graph, empty class, non-finite value).
    #[error("numeric: {0}")]
    Numeric(String),
}

impl Error {
    /// Helper for filesystem errors that keeps the offending path.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the error is something the user fixes by editing the
    /// configuration (mapped to exit code 2 by the CLI).
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
