//! YUV4MPEG2 stream reader with 4:2:0 to RGB conversion.
//!
//! Conversion is limited-range BT.601 (Y' in [16,235], Cb/Cr in [16,240]),
//! the convention standard transcoders emit for Y4M. Chroma is upsampled by
//! nearest-neighbor replication; results round half-up and clamp to [0,255].

use std::io::BufRead;

use crate::frame::Frame;
use crate::geom::FrameDims;
use crate::media::MediaError;

const KR: f64 = 0.299;
const KB: f64 = 0.114;
const KG: f64 = 1.0 - KR - KB;

#[inline]
fn round_clamp(v: f64) -> u8 {
    (v + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Converts one limited-range BT.601 Y'CbCr sample to RGB.
pub fn bt601_to_rgb(y: u8, cb: u8, cr: u8) -> [u8; 3] {
    let luma = (y as f64 - 16.0) * (255.0 / 219.0);
    let pb = (cb as f64 - 128.0) * (255.0 / 224.0);
    let pr = (cr as f64 - 128.0) * (255.0 / 224.0);
    let r = luma + 2.0 * (1.0 - KR) * pr;
    let g = luma - (2.0 * KB * (1.0 - KB) / KG) * pb - (2.0 * KR * (1.0 - KR) / KG) * pr;
    let b = luma + 2.0 * (1.0 - KB) * pb;
    [round_clamp(r), round_clamp(g), round_clamp(b)]
}

/// Streaming reader over a `YUV4MPEG2` byte source.
pub struct Y4mReader<R> {
    inner: R,
    dims: FrameDims,
    fps_num: u32,
    fps_den: u32,
    next_index: u64,
}

fn read_line<R: BufRead>(r: &mut R) -> Result<Option<Vec<u8>>, MediaError> {
    let mut line = Vec::new();
    let n = r.read_until(b'\n', &mut line)?;
    if n == 0 {
        return Ok(None);
    }
    if line.last() == Some(&b'\n') {
        line.pop();
    }
    Ok(Some(line))
}

impl<R: BufRead> Y4mReader<R> {
    pub fn new(mut inner: R) -> Result<Self, MediaError> {
        let line = read_line(&mut inner)?
            .ok_or_else(|| MediaError::MalformedHeader("empty stream".into()))?;
        let text = String::from_utf8_lossy(&line).into_owned();
        let mut parts = text.split_ascii_whitespace();
        if parts.next() != Some("YUV4MPEG2") {
            return Err(MediaError::MalformedHeader(
                "missing YUV4MPEG2 signature".into(),
            ));
        }
        let mut width = None;
        let mut height = None;
        let mut fps = None;
        let mut colorspace: Option<String> = None;
        for p in parts {
            let (k, v) = p.split_at(1);
            match k {
                "W" => width = v.parse::<u32>().ok(),
                "H" => height = v.parse::<u32>().ok(),
                "F" => {
                    let (n, d) = v
                        .split_once(':')
                        .ok_or_else(|| MediaError::MalformedHeader("bad F parameter".into()))?;
                    fps = Some((
                        n.parse::<u32>()
                            .map_err(|e| MediaError::MalformedHeader(e.to_string()))?,
                        d.parse::<u32>()
                            .map_err(|e| MediaError::MalformedHeader(e.to_string()))?,
                    ));
                }
                "C" => colorspace = Some(v.to_string()),
                // Interlacing, aspect and X extensions don't affect decoding.
                _ => {}
            }
        }
        let width = width.ok_or_else(|| MediaError::MalformedHeader("missing W".into()))?;
        let height = height.ok_or_else(|| MediaError::MalformedHeader("missing H".into()))?;
        let (fps_num, fps_den) =
            fps.ok_or_else(|| MediaError::MalformedHeader("missing F".into()))?;
        if width == 0 || height == 0 || fps_den == 0 {
            return Err(MediaError::MalformedHeader(
                "zero dimension or frame rate".into(),
            ));
        }
        // Unspecified color space defaults to C420 per the format's own
        // convention; the 420 family only differs in chroma siting, which
        // nearest-neighbor upsampling doesn't distinguish.
        if let Some(cs) = &colorspace {
            if !matches!(cs.as_str(), "420" | "420jpeg" | "420mpeg2") {
                return Err(MediaError::UnsupportedColorSpace(format!("C{cs}")));
            }
        }
        Ok(Y4mReader {
            inner,
            dims: FrameDims::new(width, height),
            fps_num,
            fps_den,
            next_index: 0,
        })
    }

    pub fn dims(&self) -> FrameDims {
        self.dims
    }

    pub fn fps(&self) -> f64 {
        self.fps_num as f64 / self.fps_den as f64
    }

    /// Decodes the next frame, or `None` at clean end of stream.
    pub fn next_frame(&mut self) -> Result<Option<Frame>, MediaError> {
        let Some(line) = read_line(&mut self.inner)? else {
            return Ok(None);
        };
        if !line.starts_with(b"FRAME") {
            return Err(MediaError::MalformedFrameMarker);
        }

        let w = self.dims.width as usize;
        let h = self.dims.height as usize;
        let cw = w.div_ceil(2);
        let ch = h.div_ceil(2);
        let mut y_plane = vec![0u8; w * h];
        let mut cb_plane = vec![0u8; cw * ch];
        let mut cr_plane = vec![0u8; cw * ch];
        for plane in [&mut y_plane, &mut cb_plane, &mut cr_plane] {
            self.inner.read_exact(plane).map_err(|_| {
                MediaError::TruncatedFrame {
                    frame_index: self.next_index,
                }
            })?;
        }

        let mut pixels = Vec::with_capacity(w * h * 3);
        for row in 0..h {
            let crow = row / 2;
            for col in 0..w {
                let ci = crow * cw + col / 2;
                let rgb = bt601_to_rgb(y_plane[row * w + col], cb_plane[ci], cr_plane[ci]);
                pixels.extend_from_slice(&rgb);
            }
        }
        let mut frame = Frame::new(self.dims, pixels, self.next_index);
        frame.timestamp_ms = Some(self.next_index as f64 * 1000.0 / self.fps());
        self.next_index += 1;
        Ok(Some(frame))
    }
}
