//! Binary PPM (P6) codec. Pixel bytes pass through untouched, so
//! write(read(x)) == x for canonically written files.

use crate::frame::Frame;
use crate::geom::FrameDims;
use crate::media::MediaError;

struct HeaderCursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    /// Advances past whitespace and `#` comments (which run to end of line).
    fn skip_separators(&mut self) {
        while let Some(&b) = self.buf.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.buf.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn read_u32(&mut self, what: &str) -> Result<u32, MediaError> {
        self.skip_separators();
        let start = self.pos;
        while self
            .buf
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_digit())
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(MediaError::MalformedHeader(format!(
                "expected integer for {what}"
            )));
        }
        std::str::from_utf8(&self.buf[start..self.pos])
            .unwrap()
            .parse::<u32>()
            .map_err(|e| MediaError::MalformedHeader(format!("{what}: {e}")))
    }
}

/// Decodes a binary P6 image with maxval 255. Header comments are allowed.
pub fn read_ppm(bytes: &[u8]) -> Result<Frame, MediaError> {
    if bytes.len() < 2 || &bytes[..2] != b"P6" {
        return Err(MediaError::MalformedHeader(
            "missing P6 magic number".into(),
        ));
    }
    let mut cur = HeaderCursor { buf: bytes, pos: 2 };
    let width = cur.read_u32("width")?;
    let height = cur.read_u32("height")?;
    let maxval = cur.read_u32("maxval")?;
    if maxval != 255 {
        return Err(MediaError::UnsupportedMaxval(maxval));
    }
    if width == 0 || height == 0 {
        return Err(MediaError::MalformedHeader(
            "zero width or height".into(),
        ));
    }
    // Exactly one whitespace byte separates the header from pixel data.
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(MediaError::MalformedHeader(
                "expected single whitespace before pixel data".into(),
            ))
        }
    }
    let dims = FrameDims::new(width, height);
    let expected = dims.pixel_count() * 3;
    let data = &bytes[cur.pos..];
    if data.len() < expected {
        return Err(MediaError::TruncatedPixelData {
            expected,
            got: data.len(),
        });
    }
    Ok(Frame::new(dims, data[..expected].to_vec(), 0))
}

/// Encodes a frame with the canonical header `P6\n<w> <h>\n255\n`.
pub fn write_ppm(frame: &Frame) -> Vec<u8> {
    let header = format!("P6\n{} {}\n255\n", frame.dims.width, frame.dims.height);
    let mut out = Vec::with_capacity(header.len() + frame.pixels.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn read_ppm_file(path: &std::path::Path) -> Result<Frame, MediaError> {
    read_ppm(&std::fs::read(path)?)
}

pub fn write_ppm_file(path: &std::path::Path, frame: &Frame) -> Result<(), MediaError> {
    Ok(std::fs::write(path, write_ppm(frame))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn reads_minimal_image() {
        let bytes = b"P6 2 1 255 \x01\x02\x03\x04\x05\x06";
        let f = read_ppm(bytes).unwrap();
        assert_eq!(f.dims, FrameDims::new(2, 1));
        assert_eq!(f.pixels, vec![1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn reads_header_with_comments() {
        let bytes = b"P6\n# made by hand\n2 1\n# another\n255\n\x01\x02\x03\x04\x05\x06";
        let f = read_ppm(bytes).unwrap();
        assert_eq!(f.dims, FrameDims::new(2, 1));
    }

    #[test]
    fn rejects_wide_maxval() {
        let bytes = b"P6 1 1 65535 \x00\x00";
        assert!(matches!(
            read_ppm(bytes),
            Err(MediaError::UnsupportedMaxval(65535))
        ));
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(
            read_ppm(b"P5 1 1 255 \x00"),
            Err(MediaError::MalformedHeader(_))
        ));
        assert!(matches!(
            read_ppm(b"P6 2 2 255 \x00\x00\x00"),
            Err(MediaError::TruncatedPixelData { expected: 12, got: 3 })
        ));
    }

    #[test]
    fn canonical_black_pixel() {
        let f = Frame::filled(FrameDims::new(1, 1), [0, 0, 0], 0);
        assert_eq!(write_ppm(&f), b"P6\n1 1\n255\n\x00\x00\x00");
    }

    #[test]
    fn full_hd_sizes() {
        let f = Frame::filled(FrameDims::new(1920, 1080), [7, 7, 7], 0);
        let bytes = write_ppm(&f);
        assert_eq!(bytes.len(), "P6\n1920 1080\n255\n".len() + 6_220_800);
    }

    #[test]
    fn roundtrip_is_byte_exact() {
        let mut rng = StdRng::seed_from_u64(1);
        for _ in 0..20 {
            let dims = FrameDims::new(rng.random_range(1..40), rng.random_range(1..40));
            let pixels = (0..dims.pixel_count() * 3).map(|_| rng.random()).collect();
            let f = Frame::new(dims, pixels, 0);
            let bytes = write_ppm(&f);
            let g = read_ppm(&bytes).unwrap();
            assert_eq!(f.pixels, g.pixels);
            assert_eq!(write_ppm(&g), bytes);
        }
    }
}
