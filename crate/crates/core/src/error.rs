//! Error type shared by all pipeline stages.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural problems with input data: missing or unknown columns.
    #[error("schema error: {0}")]
    Schema(String),

    /// Row-level problems with input data: unknown levels, bad cells.
    #[error("validation error: {0}")]
    Validation(String),

    /// A severity category is too small for the requested stratification.
    #[error("stratification error: category '{category}' has {count} rows, need at least {needed}")]
    Stratify {
        category: String,
        count: usize,
        needed: usize,
    },

    /// Resampling cannot run, e.g. a singleton minority category.
    #[error("resample error: {0}")]
    Resample(String),

    /// Invalid pipeline or model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// Model fitting or prediction failure.
    #[error("model error: {0}")]
    Model(String),

    /// Explanation failure (guards, invalid mode/model pairing).
    #[error("explain error: {0}")]
    Explain(String),

    /// Rendering failure (empty payloads).
    #[error("render error: {0}")]
    Render(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
