use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (dimension mismatch, bad parameter).
    #[error("input error: {0}")]
    Input(String),
    /// Numerical breakdown, including an exhausted pivot budget.
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// A search or iteration limit was reached before completion.
    #[error("limit reached: {0}")]
    Limit(String),
    /// An invariant that should hold by construction was violated.
    #[error("internal consistency error: {0}")]
    Internal(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
