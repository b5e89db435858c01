//! Bit-exact frame ingestion and egress.
//!
//! Binary PPM (P6, maxval 255) is the normative image format: codec-free
//! and byte-exact, so golden tests stay hermetic. Video comes in as
//! YUV4MPEG2 (4:2:0, limited-range BT.601); anything else is one
//! `ffmpeg -i input.mp4 -pix_fmt yuv420p out.y4m` away. Results go out as
//! JSONL detection records with deterministic formatting.

pub mod jsonl;
pub mod ppm;
pub mod source;
pub mod y4m;

pub use jsonl::{fmt_real, DetectionRecord, TrackRecord};
pub use ppm::{read_ppm, write_ppm};
pub use source::{open_source, read_image_dir, FrameSource};
pub use y4m::{bt601_to_rgb, Y4mReader};

use std::path::PathBuf;

use thiserror::Error;

use crate::geom::FrameDims;

#[derive(Debug, Error)]
pub enum MediaError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported maxval {0}; only 8-bit (255) rasters are handled")]
    UnsupportedMaxval(u32),
    #[error("pixel data truncated: expected {expected} bytes, got {got}")]
    TruncatedPixelData { expected: usize, got: usize },
    #[error("unsupported color space {0:?}; expected C420, C420jpeg or C420mpeg2")]
    UnsupportedColorSpace(String),
    #[error("missing FRAME marker in stream")]
    MalformedFrameMarker,
    #[error("stream truncated inside frame {frame_index}")]
    TruncatedFrame { frame_index: u64 },
    #[error("no readable frames in directory {0}")]
    EmptyDirectory(PathBuf),
    #[error("frame {index} is {got} but the stream started at {want}")]
    DimensionMismatch {
        index: u64,
        got: FrameDims,
        want: FrameDims,
    },
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
