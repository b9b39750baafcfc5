use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("parameter {values:?} outside the admissible box (coordinate {coordinate}: {value} not in [{lower}, {upper}])")]
    Domain {
        values: Vec<f64>,
        coordinate: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },

    #[error("shape mismatch in {context}: expected {expected}, got {found}")]
    Shape {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("singular system at parameter {mu:?}: {detail}")]
    Singular { mu: Vec<f64>, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unknown {family} strategy `{name}` (registered: {known})")]
    UnknownStrategy {
        family: &'static str,
        name: String,
        known: String,
    },

    #[error("mesh fingerprint mismatch: basis was built for `{found}`, configuration describes `{expected}`")]
    FingerprintMismatch { expected: String, found: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
