use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined angle: cursor coincides with ring center")]
    UndefinedAngle,
    #[error("rejected cursor event: {0}")]
    InvalidEvent(&'static str),
    #[error("invalid interaction config: {0}")]
    InvalidConfig(&'static str),
    #[error("malformed latent: {0}")]
    MalformedLatent(String),
    #[error("empty image")]
    EmptyImage,
    #[error("descriptor requires square image of at least 32x32, got {width}x{height}")]
    DescriptorInput { width: usize, height: usize },
    #[error(
        "inconsistent feature dimensionality: row {row} has {found} values, expected {expected}"
    )]
    InconsistentFeatures {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("feature parse error at row {row}, column {column}: {value:?} is not a number")]
    FeatureParse {
        row: usize,
        column: usize,
        value: String,
    },
    #[error("degenerate corpus: {0}")]
    DegenerateCorpus(String),
    #[error("invalid perplexity {perplexity} for {points} points")]
    InvalidPerplexity { perplexity: f64, points: usize },
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("invalid montage request: {0}")]
    InvalidMontage(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },
    #[error("store manifest corrupt at line {line}: {message}")]
    CorruptStore { line: usize, message: String },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("image codec error on {path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
