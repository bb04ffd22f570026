use std::path::PathBuf;

use thiserror::Error;

use crate::raster::ColorSpace;

/// Crate-wide error type.
///
/// Contract violations (wrong color space, out-of-range parameters, shape
/// mismatches) are reported as dedicated variants so callers can distinguish
/// them from I/O and decode failures, which carry the offending path.
#[derive(Debug, Error)]
pub enum Error {
    #[error("color space contract violated: expected {expected:?}, got {actual:?}")]
    ColorSpace {
        expected: ColorSpace,
        actual: ColorSpace,
    },

    #[error("parameter `{name}` = {value} outside allowed range [{min}, {max}]")]
    ParamRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("image dimensions mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(u32, u32, u32, u32),

    #[error("tensor shape error: {0}")]
    Shape(String),

    #[error("severity config invalid: {0}")]
    Config(String),

    #[error("annotation error: {0}")]
    Annotation(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    ImageCodec {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("TOML error: {0}")]
    Toml(String),
}

impl Error {
    /// Attach a path to a raw I/O error.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Attach a path to an image codec error.
    pub fn codec(path: impl Into<PathBuf>, source: image::ImageError) -> Self {
        Error::ImageCodec {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
