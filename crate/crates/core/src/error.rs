use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the segmentation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),

    #[error("unsupported image format in {path}: {reason}")]
    UnsupportedFormat { path: PathBuf, reason: String },

    #[error("corrupt image {path}: {reason}")]
    CorruptImage { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid raster: {0}")]
    InvalidRaster(String),

    #[error("geometry mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    GeometryMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },

    #[error("invalid median window {0}: must be odd and >= 3")]
    InvalidWindow(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("partition has an empty side")]
    EmptySide,

    #[error("partition side has zero association")]
    ZeroAssociation,

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("no splitting point yields two nonempty sides")]
    NoValidSplit,

    #[error("ground-truth mask is empty")]
    EmptyGroundTruth,

    #[error("cannot aggregate an empty list of reports")]
    EmptyList,

    /// Bad run configuration, with the position or field when known.
    #[error("config {}{}: {message}", path.display(), location(*line, *column, field.as_deref()))]
    Config {
        path: PathBuf,
        line: Option<usize>,
        column: Option<usize>,
        field: Option<String>,
        message: String,
    },
}

fn location(line: Option<usize>, column: Option<usize>, field: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(l) = line {
        out += &format!(", line {l}");
        if let Some(c) = column {
            out += &format!(", column {c}");
        }
    }
    if let Some(f) = field {
        out += &format!(", field `{f}`");
    }
    out
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
