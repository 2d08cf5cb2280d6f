use std::path::PathBuf;

/// Unified error type for the audit pipeline.
///
/// Variants map onto process exit codes: configuration problems exit 2,
/// an unusable translation backend exits 3, schema or data-format
/// violations exit 4, anything else exits 1.
#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("config error: {0}")]
    Config(String),

    #[error("backend unavailable: {0}")]
    Unavailable(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("invalid translation request: {0}")]
    InvalidRequest(String),

    #[error("{path}: schema mismatch: expected {expected}, found {found}")]
    Schema {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("{path}:{line}: {message}")]
    Data {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("statistics error: {0}")]
    Stats(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Wraps a failure with the pipeline stage it happened in, so the CLI
    /// diagnostic names the stage. Exit status comes from the cause.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<AuditError>,
    },
}

impl AuditError {
    pub fn data(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        AuditError::Data {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn stage(stage: &'static str, source: AuditError) -> Self {
        AuditError::Stage {
            stage,
            source: Box::new(source),
        }
    }

    /// Process exit status for the CLI: 2 config, 3 backend, 4 schema/data, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            AuditError::Config(_) | AuditError::InvalidRequest(_) => 2,
            AuditError::Unavailable(_) | AuditError::Protocol(_) => 3,
            AuditError::Schema { .. } | AuditError::Data { .. } => 4,
            AuditError::Stats(_) | AuditError::Io { .. } => 1,
            AuditError::Stage { source, .. } => source.exit_code(),
        }
    }
}

pub type Result<T, E = AuditError> = std::result::Result<T, E>;
