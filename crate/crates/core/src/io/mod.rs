//! Video and field persistence.

mod field_file;
mod png_seq;
mod y4m;

pub use field_file::{
    decode_field, decode_header, encode_field, load_field, payload_values, save_field, FieldHeader, FIELD_MAGIC,
    FIELD_VERSION, HEADER_BYTES,
};
pub use png_seq::{frame_name, quantize, read_png_sequence, write_png_sequence, BitDepth, DEFAULT_PATTERN};
pub use y4m::{
    decode_y4m, encode_y4m, parse_y4m_header, read_y4m, read_y4m_with_header, write_y4m, Colorspace, FrameRate,
    Y4mHeader,
};

use std::path::PathBuf;

/// Failures reading or writing files. Each malformed-input condition has its
/// own variant.
#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Os {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic {found:?} (expected \"VFF1\")")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported field file version {0}")]
    UnsupportedVersion(u32),

    #[error("field file length mismatch: header implies {expected} bytes, found {found}")]
    LengthMismatch { expected: u64, found: u64 },

    #[error("invalid field file header: {0}")]
    InvalidHeader(String),

    #[error("unknown y4m colorspace {0:?}")]
    UnknownColorspace(String),

    #[error("malformed y4m header: {0}")]
    MalformedHeader(String),

    #[error("malformed y4m frame marker at frame {index}")]
    MalformedFrame { index: usize },

    #[error("truncated y4m payload in frame {index}")]
    Truncated { index: usize },

    #[error("{}: frame is {found:?} (H, W), expected {expected:?}", path.display())]
    InconsistentDims { path: PathBuf, expected: [usize; 2], found: [usize; 2] },

    #[error("{}: no frames match {pattern:?}", path.display())]
    EmptyDirectory { path: PathBuf, pattern: String },

    #[error("{}: {message}", path.display())]
    Decode { path: PathBuf, message: String },

    #[error("{}: {message}", path.display())]
    Encode { path: PathBuf, message: String },

    #[error("{}: unsupported image format: {message}", path.display())]
    UnsupportedFormat { path: PathBuf, message: String },

    #[error("cannot write an empty video")]
    EmptyVideo,

    #[error("invalid frame pattern {pattern:?}: {message}")]
    BadPattern { pattern: String, message: String },
}
