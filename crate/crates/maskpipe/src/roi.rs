//! ROI preprocessing between the detector and the classifier: expand each
//! detected box, clamp it to the raster, crop, resize, normalize, and batch
//! the results for one classifier call.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Detection;
use crate::frame::Frame;
use crate::geom::{clamp_box, BoundingBox, FrameDims};

/// How classifier input tensors are laid out and scaled.
///
/// `normalize` computes `(pixel/255 - mean[c]) / scale[c]` per channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessSpec {
    pub target_width: u32,
    pub target_height: u32,
    pub mean: [f32; 3],
    pub scale: [f32; 3],
    pub layout: ChannelLayout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelLayout {
    /// HWC: RGB triples packed per pixel.
    Interleaved,
    /// CHW: one full plane per channel.
    Planar,
}

impl Default for PreprocessSpec {
    fn default() -> Self {
        // 224x224, plain /255 scaling. Real model specs override per model.
        Self {
            target_width: 224,
            target_height: 224,
            mean: [0.0; 3],
            scale: [1.0; 3],
            layout: ChannelLayout::Interleaved,
        }
    }
}

impl PreprocessSpec {
    pub fn validate(&self) -> Result<(), RoiError> {
        if self.target_width < 1 || self.target_height < 1 {
            return Err(RoiError::InvalidSpec("target dims must be >= 1".into()));
        }
        if self.scale.iter().any(|&s| s == 0.0 || !s.is_finite()) {
            return Err(RoiError::InvalidSpec(
                "scale components must be finite and nonzero".into(),
            ));
        }
        Ok(())
    }

    /// Shape of one normalized element, in the declared layout.
    pub fn element_shape(&self) -> [usize; 3] {
        let (h, w) = (self.target_height as usize, self.target_width as usize);
        match self.layout {
            ChannelLayout::Interleaved => [h, w, 3],
            ChannelLayout::Planar => [3, h, w],
        }
    }
}

/// An RGB sub-rectangle cut out of a frame. May be empty (zero extent).
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub width: u32,
    pub height: u32,
    /// `width * height * 3` bytes, RGB interleaved.
    pub data: Vec<u8>,
}

impl Patch {
    pub fn empty() -> Self {
        Patch {
            width: 0,
            height: 0,
            data: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.width == 0 || self.height == 0
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }
}

/// Contiguous f32 buffer with an explicit shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape does not match buffer length"
        );
        Tensor { shape, data }
    }
}

/// One classifier batch plus, per element, the detection it came from and the
/// expanded clamped box that was actually cropped.
#[derive(Debug, Clone)]
pub struct TensorBatch {
    /// Leading extent is the batch size N.
    pub tensor: Tensor,
    /// N entries, in detection order.
    pub provenance: Vec<(Detection, BoundingBox)>,
    /// Detections whose crop rounded to zero area and were dropped.
    pub skipped: Vec<(Detection, BoundingBox)>,
}

impl TensorBatch {
    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }
}

#[derive(Debug, Error)]
pub enum RoiError {
    #[error("patch is {got_w}x{got_h} but spec target is {want_w}x{want_h}")]
    DimensionMismatch {
        got_w: u32,
        got_h: u32,
        want_w: u32,
        want_h: u32,
    },
    #[error("invalid preprocess spec: {0}")]
    InvalidSpec(String),
}

/// Grows `b` by `ratio` in each dimension about its center, then clamps to
/// the raster. `ratio = 0.20` scales width and height by 1.2.
pub fn expand_box(b: &BoundingBox, ratio: f64, dims: FrameDims) -> BoundingBox {
    debug_assert!(ratio >= 0.0);
    let nw = b.w * (1.0 + ratio);
    let nh = b.h * (1.0 + ratio);
    let expanded = BoundingBox {
        x: b.x - (nw - b.w) / 2.0,
        y: b.y - (nh - b.h) / 2.0,
        w: nw,
        h: nh,
    };
    clamp_box(&expanded, dims)
}

/// Integer crop rectangle for a clamped box: floor the corner, round the
/// extents half-up, then re-clip to the raster. Returns `None` when the
/// rounded extent is zero.
pub fn crop_rect(b: &BoundingBox, dims: FrameDims) -> Option<(u32, u32, u32, u32)> {
    let x = b.x.floor().max(0.0) as u32;
    let y = b.y.floor().max(0.0) as u32;
    if x >= dims.width || y >= dims.height {
        return None;
    }
    let w = (b.w.round() as u64).min((dims.width - x) as u64) as u32;
    let h = (b.h.round() as u64).min((dims.height - y) as u64) as u32;
    if w == 0 || h == 0 {
        None
    } else {
        Some((x, y, w, h))
    }
}

/// Cuts the pixel rectangle for `b` out of `frame`. `b` must already be
/// clamped; the rounded rectangle is re-clipped defensively. Returns an
/// empty patch when the rectangle rounds away to nothing.
pub fn crop(frame: &Frame, b: &BoundingBox) -> Patch {
    let Some((x, y, w, h)) = crop_rect(b, frame.dims) else {
        return Patch::empty();
    };
    let stride = frame.dims.width as usize * 3;
    let mut data = Vec::with_capacity(w as usize * h as usize * 3);
    for row in y..y + h {
        let start = row as usize * stride + x as usize * 3;
        data.extend_from_slice(&frame.pixels[start..start + w as usize * 3]);
    }
    Patch {
        width: w,
        height: h,
        data,
    }
}

/// Bilinear resize with half-pixel-center alignment: the source coordinate
/// for output index `i` is `(i + 0.5) * src/dst - 0.5`, edge-clamped.
/// Channels are interpolated independently; results round half-up to 8 bits.
pub fn resize_bilinear(p: &Patch, tw: u32, th: u32) -> Patch {
    assert!(!p.is_empty(), "cannot resize an empty patch");
    assert!(tw >= 1 && th >= 1);
    if p.width == tw && p.height == th {
        return p.clone();
    }

    let sw = p.width as usize;
    let sh = p.height as usize;

    // Per-axis sample positions, shared across rows/columns.
    let axis = |dst: u32, src: usize| -> Vec<(usize, usize, f64)> {
        (0..dst)
            .map(|i| {
                let c = ((i as f64 + 0.5) * src as f64 / dst as f64 - 0.5)
                    .clamp(0.0, (src - 1) as f64);
                let lo = c.floor() as usize;
                let hi = (lo + 1).min(src - 1);
                (lo, hi, c - lo as f64)
            })
            .collect()
    };
    let xs = axis(tw, sw);
    let ys = axis(th, sh);

    let mut data = Vec::with_capacity(tw as usize * th as usize * 3);
    for &(y0, y1, fy) in &ys {
        let row0 = y0 * sw * 3;
        let row1 = y1 * sw * 3;
        for &(x0, x1, fx) in &xs {
            for c in 0..3 {
                let p00 = p.data[row0 + x0 * 3 + c] as f64;
                let p01 = p.data[row0 + x1 * 3 + c] as f64;
                let p10 = p.data[row1 + x0 * 3 + c] as f64;
                let p11 = p.data[row1 + x1 * 3 + c] as f64;
                let top = p00 + (p01 - p00) * fx;
                let bot = p10 + (p11 - p10) * fx;
                let v = top + (bot - top) * fy;
                data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Patch {
        width: tw,
        height: th,
        data,
    }
}

/// Scales a patch into a classifier input tensor:
/// `out[c] = (pixel[c]/255 - mean[c]) / scale[c]`, laid out per the spec.
pub fn normalize(p: &Patch, spec: &PreprocessSpec) -> Result<Tensor, RoiError> {
    if p.width != spec.target_width || p.height != spec.target_height {
        return Err(RoiError::DimensionMismatch {
            got_w: p.width,
            got_h: p.height,
            want_w: spec.target_width,
            want_h: spec.target_height,
        });
    }
    let n = p.width as usize * p.height as usize;
    let mut data = vec![0.0f32; n * 3];
    match spec.layout {
        ChannelLayout::Interleaved => {
            for (i, &b) in p.data.iter().enumerate() {
                let c = i % 3;
                data[i] = (b as f32 / 255.0 - spec.mean[c]) / spec.scale[c];
            }
        }
        ChannelLayout::Planar => {
            for (i, px) in p.data.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    data[c * n + i] = (px[c] as f32 / 255.0 - spec.mean[c]) / spec.scale[c];
                }
            }
        }
    }
    Ok(Tensor::new(spec.element_shape().to_vec(), data))
}

/// Recovers `pixel/255` from a normalized tensor; inverse of [`normalize`].
pub fn denormalize(t: &Tensor, spec: &PreprocessSpec) -> Vec<f32> {
    let n = (spec.target_width * spec.target_height) as usize;
    let mut out = vec![0.0f32; n * 3];
    match spec.layout {
        ChannelLayout::Interleaved => {
            for (i, &v) in t.data.iter().enumerate() {
                out[i] = v * spec.scale[i % 3] + spec.mean[i % 3];
            }
        }
        ChannelLayout::Planar => {
            for c in 0..3 {
                for i in 0..n {
                    out[i * 3 + c] = t.data[c * n + i] * spec.scale[c] + spec.mean[c];
                }
            }
        }
    }
    out
}

/// Runs expand -> clamp -> crop -> resize -> normalize for every detection
/// and stacks the results into one batch, preserving detection order.
/// Detections whose crop rounds to zero area are dropped into `skipped`.
pub fn process_detections(
    frame: &Frame,
    dets: &[Detection],
    spec: &PreprocessSpec,
    ratio: f64,
) -> Result<TensorBatch, RoiError> {
    let elem = spec.element_shape();
    let elem_len: usize = elem.iter().product();
    let mut data = Vec::with_capacity(elem_len * dets.len());
    let mut provenance = Vec::with_capacity(dets.len());
    let mut skipped = Vec::new();

    for det in dets {
        let roi = expand_box(&det.bbox, ratio, frame.dims);
        let patch = crop(frame, &roi);
        if patch.is_empty() {
            skipped.push((det.clone(), roi));
            continue;
        }
        let resized = resize_bilinear(&patch, spec.target_width, spec.target_height);
        let t = normalize(&resized, spec)?;
        data.extend_from_slice(&t.data);
        provenance.push((det.clone(), roi));
    }

    let n = provenance.len();
    let mut shape = vec![n];
    shape.extend_from_slice(&elem);
    Ok(TensorBatch {
        tensor: Tensor::new(shape, data),
        provenance,
        skipped,
    })
}
