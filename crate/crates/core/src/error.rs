use std::io;

use thiserror::Error;

/// Errors produced by the segmentation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("malformed image: {0}")]
    Format(String),

    #[error("unsupported image format: {0}")]
    Unsupported(String),

    #[error("image has zero width or height")]
    ZeroDimension,

    #[error("histogram is empty")]
    EmptyHistogram,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: image is {image_w}x{image_h}, labels are {labels_w}x{labels_h}")]
    DimensionMismatch {
        image_w: usize,
        image_h: usize,
        labels_w: usize,
        labels_h: usize,
    },

    #[error("inconsistent fragment geometry: {0}")]
    Geometry(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
