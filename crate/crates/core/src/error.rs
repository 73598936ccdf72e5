use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("patch sampling failed at step {step} after {attempts} proposals")]
    Sampling { step: usize, attempts: usize },

    #[error("need at least {need} correspondences, got {got}")]
    InsufficientCorrespondences { got: usize, need: usize },

    #[error("degenerate pose: {0}")]
    DegeneratePose(String),

    #[error("score is undefined: {0}")]
    UndefinedScore(String),

    #[error("no candidate view passed the validity floors")]
    NoValidView,

    #[error("invalid input: {0}")]
    Input(String),

    #[error("failed to load record `{record}`: {reason}")]
    Load { record: String, reason: String },

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("unsupported schema version {found} (expected {expected})")]
    Schema { found: u32, expected: u32 },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("image error on {}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("png error on {}: {reason}", path.display())]
    Png { path: PathBuf, reason: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag used in structured CLI output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Config(_) => "config",
            Error::Sampling { .. } => "sampling",
            Error::InsufficientCorrespondences { .. } => "insufficient_correspondences",
            Error::DegeneratePose(_) => "degenerate_pose",
            Error::UndefinedScore(_) => "undefined_score",
            Error::NoValidView => "no_valid_view",
            Error::Input(_) => "input",
            Error::Load { .. } => "load",
            Error::MissingFile(_) => "missing_file",
            Error::Schema { .. } => "schema",
            Error::Io { .. } => "io",
            Error::Image { .. } => "image",
            Error::Png { .. } => "png",
            Error::Json(_) => "json",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
