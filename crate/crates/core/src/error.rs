//! Error taxonomy shared by every module.
//!
//! The CLI maps these onto exit codes, so the distinction between input,
//! format, and numeric failures is part of the public contract.

/// Library-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Caller handed us something invalid (dimension mismatch, bad range,
    /// empty dataset, unknown variant name, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A serialized artifact (model file, fingerprint, manifest, report) is
    /// malformed or has an unsupported version.
    #[error("format error: {0}")]
    Format(String),

    /// A computation produced a non-finite value or otherwise failed
    /// numerically.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A row of a CSV file could not be parsed. `row` is 1-based and counts
    /// the header row if one is present.
    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    /// An oracle query failed; `index` identifies the fingerprint point.
    #[error("query error at point {index}: {msg}")]
    Query { index: usize, msg: String },

    /// A pipeline stage failed; wraps the underlying error with the stage
    /// name so experiment runs abort with a tagged error.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the name of the pipeline stage that produced it.
    pub fn in_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// The innermost non-stage error, used for exit-code mapping.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
