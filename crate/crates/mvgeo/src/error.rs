//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes of the toolkit, grouped so that callers (in particular the
/// CLI) can map them onto coarse categories: bad configuration, bad data,
/// or a numerical breakdown at runtime.
#[derive(Debug, Error)]
pub enum Error {
    /// An invalid option value or parameter combination.
    #[error("configuration error: {0}")]
    Config(String),

    /// Structurally invalid input data (dimensions, ranges, missing pieces).
    #[error("data error: {0}")]
    Data(String),

    /// A file could not be parsed; `location` names the byte offset or line.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    /// A mathematical operation was evaluated outside its domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A warp produced no usable pixels: the views do not overlap.
    #[error("no overlap: {0}")]
    NoOverlap(String),

    /// Masking removed every candidate pixel from a loss.
    #[error("fully masked: {0}")]
    FullyMasked(String),

    /// Optimization produced a non-finite loss.
    #[error("divergence at step {step}: {message}")]
    Divergence { step: usize, message: String },

    /// Frame-to-frame tracking failed.
    #[error("tracking lost: {reason}")]
    TrackingLost { frame: Option<usize>, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
