//! Deterministic synthetic scenes: ground truth for the replay backends and
//! every hermetic end-to-end test.
//!
//! A scene is a gray canvas with rectangular "faces" moving on straight
//! lines. Masked faces carry a high-contrast 2x2 marker pattern in their
//! upper half, so a pixel-level classifier can separate the two classes
//! deterministically.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backend::BackendError;
use crate::frame::{Frame, MaskLabel};
use crate::geom::{clamp_box, BoundingBox, FrameDims};
use crate::roi::crop_rect;

/// Canvas color outside any face.
pub const SCENE_BACKGROUND: [u8; 3] = [110, 110, 110];
/// Fill color of a face rectangle.
pub const SCENE_FACE_FILL: [u8; 3] = [190, 160, 140];
/// Marker cell colors; chosen at the extremes so they survive resizing.
pub const MARKER_DARK: [u8; 3] = [0, 0, 0];
pub const MARKER_BRIGHT: [u8; 3] = [255, 255, 255];

/// One scripted face: box at frame 0, class, visibility window and a
/// constant per-frame velocity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFace {
    pub bbox: BoundingBox,
    pub label: MaskLabel,
    #[serde(default)]
    pub visible_from_frame: u64,
    #[serde(default = "default_visible_to")]
    pub visible_to_frame: u64,
    /// Pixels per frame, applied as `frame_index * velocity`.
    #[serde(default)]
    pub velocity: (f64, f64),
}

fn default_visible_to() -> u64 {
    u64::MAX
}

impl SceneFace {
    pub fn new(bbox: BoundingBox, label: MaskLabel) -> Self {
        SceneFace {
            bbox,
            label,
            visible_from_frame: 0,
            visible_to_frame: u64::MAX,
            velocity: (0.0, 0.0),
        }
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
        self.velocity = (vx, vy);
        self
    }

    pub fn visible_between(mut self, from: u64, to: u64) -> Self {
        self.visible_from_frame = from;
        self.visible_to_frame = to;
        self
    }

    /// Box after `frame_index` frames of motion, before clamping.
    pub fn box_at(&self, frame_index: u64) -> BoundingBox {
        BoundingBox {
            x: self.bbox.x + self.velocity.0 * frame_index as f64,
            y: self.bbox.y + self.velocity.1 * frame_index as f64,
            w: self.bbox.w,
            h: self.bbox.h,
        }
    }
}

/// Ground-truth description of a synthetic stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneSpec {
    pub dims: FrameDims,
    pub faces: Vec<SceneFace>,
}

impl SceneSpec {
    pub fn empty() -> Self {
        SceneSpec {
            dims: FrameDims::new(1, 1),
            faces: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        for (i, f) in self.faces.iter().enumerate() {
            if f.bbox.w <= 0.0 || f.bbox.h <= 0.0 {
                return Err(BackendError::InvalidScene {
                    reason: format!("face {i} has nonpositive size {}x{}", f.bbox.w, f.bbox.h),
                });
            }
        }
        Ok(())
    }

    /// Clamped boxes and labels of every face visible at `frame_index`, in
    /// declaration order. Faces clamped down to zero area are excluded.
    pub fn ground_truth(&self, frame_index: u64) -> Vec<(BoundingBox, MaskLabel)> {
        self.ground_truth_with_ordinals(frame_index)
            .into_iter()
            .map(|(_, b, l)| (b, l))
            .collect()
    }

    /// As [`ground_truth`](Self::ground_truth), keeping each face's ordinal
    /// in the scene so dropout schedules can reference it.
    pub fn ground_truth_with_ordinals(
        &self,
        frame_index: u64,
    ) -> Vec<(usize, BoundingBox, MaskLabel)> {
        self.faces
            .iter()
            .enumerate()
            .filter(|(_, f)| {
                frame_index >= f.visible_from_frame && frame_index <= f.visible_to_frame
            })
            .map(|(i, f)| (i, clamp_box(&f.box_at(frame_index), self.dims), f.label))
            .filter(|(_, b, _)| !b.is_empty())
            .collect()
    }
}

/// `(frame_index, face_ordinal)` pairs at which the scripted detector
/// suppresses that face's detection.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DropoutSchedule {
    pairs: BTreeSet<(u64, usize)>,
}

impl DropoutSchedule {
    pub fn new(pairs: impl IntoIterator<Item = (u64, usize)>) -> Self {
        DropoutSchedule {
            pairs: pairs.into_iter().collect(),
        }
    }

    /// Drops `face_ordinal` on every frame in `frames`.
    pub fn drop_face_over(face_ordinal: usize, frames: std::ops::Range<u64>) -> Self {
        Self::new(frames.map(|f| (f, face_ordinal)))
    }

    pub fn contains(&self, frame_index: u64, face_ordinal: usize) -> bool {
        self.pairs.contains(&(frame_index, face_ordinal))
    }

    pub fn validate(&self, scene: &SceneSpec) -> Result<(), BackendError> {
        for &(_, ord) in &self.pairs {
            if ord >= scene.faces.len() {
                return Err(BackendError::InvalidScene {
                    reason: format!(
                        "dropout references face {ord} but the scene has {}",
                        scene.faces.len()
                    ),
                });
            }
        }
        Ok(())
    }
}

fn fill_rect(frame: &mut Frame, x: u32, y: u32, w: u32, h: u32, rgb: [u8; 3]) {
    for row in y..(y + h).min(frame.dims.height) {
        for col in x..(x + w).min(frame.dims.width) {
            frame.set(col, row, rgb);
        }
    }
}

/// Renders the scene at `frame_index` and returns the raster together with
/// the ground truth that produced it. The raster is a pure function of
/// `(spec, frame_index)`.
pub fn render_scene(
    spec: &SceneSpec,
    frame_index: u64,
) -> Result<(Frame, Vec<(BoundingBox, MaskLabel)>), BackendError> {
    spec.validate()?;
    let mut frame = Frame::filled(spec.dims, SCENE_BACKGROUND, frame_index);
    let truth = spec.ground_truth(frame_index);

    for (bbox, label) in &truth {
        let Some((x, y, w, h)) = crop_rect(bbox, spec.dims) else {
            continue;
        };
        fill_rect(&mut frame, x, y, w, h, SCENE_FACE_FILL);
        if *label == MaskLabel::Mask {
            // 2x2 checker in the upper half of the face: two cell columns of
            // w/2, two cell rows of h/4 each.
            let cw = w / 2;
            let ch = h / 4;
            for cell_row in 0..2u32 {
                for cell_col in 0..2u32 {
                    let color = if (cell_row + cell_col) % 2 == 0 {
                        MARKER_BRIGHT
                    } else {
                        MARKER_DARK
                    };
                    fill_rect(
                        &mut frame,
                        x + cell_col * cw,
                        y + cell_row * ch,
                        cw,
                        ch,
                        color,
                    );
                }
            }
        }
    }
    Ok((frame, truth))
}
