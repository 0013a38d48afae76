use thiserror::Error;

/// Errors raised by fitting, selection and benchmarking.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("index {index} out of range 1..={n}")]
    Range { index: usize, n: usize },
    #[error("invalid structure: {0}")]
    Structure(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("input too large: {0}")]
    Size(String),
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
