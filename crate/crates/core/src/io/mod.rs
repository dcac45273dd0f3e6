//! File formats: ASCII PLY point clouds and binary PGM rasters.

pub mod pgm;
pub mod ply;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
}

impl IoError {
    pub(crate) fn format(path: &std::path::Path, msg: impl Into<String>) -> Self {
        IoError::Format {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }
}
