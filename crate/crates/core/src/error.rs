use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid word {0:?}: expected 1-7 uppercase ASCII letters")]
    InvalidWord(String),

    #[error("duplicate word id {0:?}")]
    DuplicateWord(String),

    #[error("font has no glyph for {0:?}")]
    MissingGlyph(char),

    #[error("canvas {width}x{height} is too small: {reason}")]
    CanvasTooSmall {
        width: u32,
        height: u32,
        reason: String,
    },

    #[error("raster dimensions differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("image {width}x{height} is smaller than the {window}px window")]
    ImageTooSmall { width: u32, height: u32, window: u32 },

    #[error("cell {cell_w}x{cell_h} does not fit in a {width}x{height} raster")]
    CellTooLarge {
        cell_w: u32,
        cell_h: u32,
        width: u32,
        height: u32,
    },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("malformed manifest {path}: line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("malformed records file {path}: line {line}: {message}")]
    Records {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing exemplar image {0}")]
    MissingExemplar(PathBuf),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image codec error for {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("campaign cancelled")]
    Cancelled,

    #[error("environment variable {0} is not set; export it to use a live model endpoint")]
    MissingEnv(&'static str),

    #[error("model client error: {0}")]
    Client(String),
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
