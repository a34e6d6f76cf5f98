use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("spacing error in series '{series}': {message}")]
    Spacing { series: String, message: String },

    #[error("series '{0}' empty after cleaning")]
    EmptySeries(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("split error: need {required} points, have {available}")]
    Split { required: usize, available: usize },

    #[error("lookup error: feature '{feature}' row {row} has code {code}, table has {rows} rows")]
    Lookup {
        feature: String,
        row: usize,
        code: u32,
        rows: usize,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("training diverged at epoch {epoch} (loss {loss}); try a smaller learning rate")]
    Divergence { epoch: usize, loss: f64 },

    #[error("metric error: {0}")]
    Metric(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("model format error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
