use std::io;

use thiserror::Error;

use crate::filters::FeatureDescriptor;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown band id {0}")]
    UnknownBand(u32),

    #[error("pixel ({row}, {col}) is outside a {height}x{width} raster")]
    OutOfBounds {
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("zero-variance feature")]
    ZeroVariance,

    #[error("descriptor {0} is already present")]
    DuplicateDescriptor(FeatureDescriptor),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("class {0} has no labeled sample")]
    MissingClass(usize),

    #[error("invalid label {label} for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },

    #[error("feature column {0} is not mean-centered with unit norm")]
    NotNormalized(usize),

    #[error("model state is not converged; violation scores would be stale")]
    NotConverged,

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("reconstruction precondition violated at pixel {0}")]
    Reconstruction(usize),

    #[error("cannot parse descriptor `{text}`: {reason}")]
    ParseDescriptor { text: String, reason: String },

    #[error("malformed file {path}: {reason}")]
    Format { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(path: impl AsRef<std::path::Path>, reason: impl Into<String>) -> Self {
        Error::Format {
            path: path.as_ref().display().to_string(),
            reason: reason.into(),
        }
    }
}
