use thiserror::Error;

/// Errors surfaced by corpus loading, training, and the CLI.
#[derive(Debug, Error)]
pub enum Error {
    /// A line in a UCI bag-of-words stream could not be parsed.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An id in the input stream falls outside the range declared by the header.
    #[error("bounds error at line {line}: {msg}")]
    Bounds { line: usize, msg: String },

    /// A count or numeric field holds an invalid value.
    #[error("value error at line {line}: {msg}")]
    Value { line: usize, msg: String },

    /// Vocabulary file does not match the declared vocabulary size.
    #[error("vocabulary has {got} entries, corpus declares {want}")]
    VocabSize { got: usize, want: usize },

    /// Not enough usable points for a least-squares fit.
    #[error("fit error: {0}")]
    Fit(String),

    /// Matrix or corpus dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A configuration precondition was violated.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Model file is malformed.
    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }

    pub(crate) fn bounds(line: usize, msg: impl Into<String>) -> Self {
        Error::Bounds { line, msg: msg.into() }
    }

    pub(crate) fn value(line: usize, msg: impl Into<String>) -> Self {
        Error::Value { line, msg: msg.into() }
    }
}
