//! Decoded frame raster and the two-class label type.

use serde::{Deserialize, Serialize};

use crate::geom::FrameDims;

/// A decoded 8-bit RGB raster, row-major interleaved, plus its position in
/// the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub dims: FrameDims,
    /// `width * height * 3` bytes, RGB interleaved, row-major.
    pub pixels: Vec<u8>,
    /// Ordinal within the stream; strictly increasing for any source.
    pub index: u64,
    pub timestamp_ms: Option<f64>,
}

impl Frame {
    pub fn new(dims: FrameDims, pixels: Vec<u8>, index: u64) -> Self {
        assert_eq!(
            pixels.len(),
            dims.pixel_count() * 3,
            "pixel buffer length must be width*height*3"
        );
        Self {
            dims,
            pixels,
            index,
            timestamp_ms: None,
        }
    }

    /// Uniform-color frame, useful for synthesis and tests.
    pub fn filled(dims: FrameDims, rgb: [u8; 3], index: u64) -> Self {
        let mut pixels = Vec::with_capacity(dims.pixel_count() * 3);
        for _ in 0..dims.pixel_count() {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(dims, pixels, index)
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.dims.width as usize + x as usize) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.dims.width as usize + x as usize) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// Classifier output class. Exactly two values exist; improperly worn masks
/// count as `NoMask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaskLabel {
    Mask,
    NoMask,
}

impl MaskLabel {
    /// Canonical display string, also used in JSONL records.
    pub fn as_str(&self) -> &'static str {
        match self {
            MaskLabel::Mask => "Mask",
            MaskLabel::NoMask => "No_Mask",
        }
    }
}

impl std::fmt::Display for MaskLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}
