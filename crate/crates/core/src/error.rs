use std::path::PathBuf;

use crate::io::IoError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Shapes or sizes that do not line up (bank vs. field, pred vs. ref, ...).
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("coordinate ({x}, {y}, {t}) lies outside the grid domain {dims:?} (T, H, W)")]
    Domain { x: f64, y: f64, t: f64, dims: [usize; 3] },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("rank-deficient least-squares system at voxel (t={}, y={}, x={})", voxel[0], voxel[1], voxel[2])]
    RankDeficient { voxel: [usize; 3] },

    #[error(transparent)]
    Io(#[from] IoError),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }
}

/// Attach a path to a `std::io::Error`.
pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io(IoError::Os { path, source })
}
