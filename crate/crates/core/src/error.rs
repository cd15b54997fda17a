use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}", config_message(*.line, .key, .message))]
    Config {
        /// 1-based line in the config file, absent for missing keys.
        line: Option<usize>,
        key: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Idx {
        path: PathBuf,
        #[source]
        source: IdxError,
    },

    #[error("{0}")]
    Data(String),

    #[error("inconsistent system: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inconsistent { residual: f64, tolerance: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn config_message(line: Option<usize>, key: &str, message: &str) -> String {
    match line {
        Some(line) => format!("config line {line}: `{key}`: {message}"),
        None => format!("config: `{key}`: {message}"),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(line: Option<usize>, key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            line,
            key: key.to_string(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end: 1 for configuration
    /// errors, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 1,
            _ => 2,
        }
    }
}

/// Failures while decoding an IDX container. Each variant names the header
/// field or payload section that is at fault.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum IdxError {
    #[error("unsupported magic 0x{found:08x} (expected 0x{expected:08x})")]
    UnsupportedMagic { found: u32, expected: u32 },

    #[error("truncated {field}: expected {expected} bytes, found {found}")]
    Truncated {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("trailing bytes after payload: expected {expected} bytes, found {found}")]
    TrailingBytes { expected: usize, found: usize },

    #[error("unexpected image shape {rows}x{cols} (expected 28x28)")]
    Shape { rows: usize, cols: usize },

    #[error("count mismatch: {images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
}
