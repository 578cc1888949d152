use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("{path}:{line}: {message}")]
    FormatLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("pixel ({x}, {y}) outside {width}x{height} frame")]
    Bounds {
        x: usize,
        y: usize,
        width: usize,
        height: usize,
    },

    #[error("white plate region is degenerate: band {band} mean {mean:e}")]
    DegenerateWhitePlate { band: usize, mean: f64 },

    #[error("degenerate dataset: {0}")]
    DegenerateDataset(String),

    #[error("degenerate evaluation: {0}")]
    DegenerateEval(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid scene: {0}")]
    Spec(String),

    #[error("image decode error on {path}: {message}")]
    Image { path: PathBuf, message: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
