use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field contains non-finite samples")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("field is {actual_width}x{actual_height} but plan expects {expected_width}x{expected_height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        actual_width: usize,
        actual_height: usize,
    },

    #[error("unknown propagation method `{0}`")]
    UnknownMethod(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("grayscale required, got {0}")]
    GrayscaleRequired(String),

    #[error("truncated data: {0}")]
    Truncated(String),

    #[error("invalid object spec: {0}")]
    InvalidSpec(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, Error>;
