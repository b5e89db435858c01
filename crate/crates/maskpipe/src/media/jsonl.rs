//! Machine-readable per-frame records, one JSON object per line.
//!
//! Serialization is hand-rolled so the byte stream is fully deterministic:
//! fixed key order, reals printed with at most 4 fractional digits and
//! trailing zeros trimmed. Reading back goes through serde.

use std::fmt::Write as _;

use serde::Deserialize;

use crate::frame::MaskLabel;
use crate::geom::BoundingBox;
use crate::tracker::TrackOutput;

/// One emitted track in a frame record.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct TrackRecord {
    pub id: u64,
    pub label: String,
    pub confidence: f64,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub coasting: bool,
}

/// Everything logged for one processed frame.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct DetectionRecord {
    pub frame_index: u64,
    pub tracks: Vec<TrackRecord>,
}

impl DetectionRecord {
    pub fn from_outputs(frame_index: u64, outputs: &[TrackOutput]) -> Self {
        DetectionRecord {
            frame_index,
            tracks: outputs
                .iter()
                .map(|o| TrackRecord {
                    id: o.id,
                    label: o.label.as_str().to_string(),
                    confidence: o.confidence,
                    bbox: o.bbox,
                    coasting: o.coasting,
                })
                .collect(),
        }
    }

    pub fn label_of(&self, i: usize) -> Option<MaskLabel> {
        match self.tracks.get(i)?.label.as_str() {
            "Mask" => Some(MaskLabel::Mask),
            "No_Mask" => Some(MaskLabel::NoMask),
            _ => None,
        }
    }

    /// Parses one line previously produced by [`write_jsonl`].
    pub fn parse(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Formats a real with up to 4 fractional digits, trailing zeros trimmed,
/// so `1.0` prints as `1` and `0.3333333` as `0.3333`.
pub fn fmt_real(v: f64) -> String {
    let mut s = format!("{v:.4}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    if s == "-0" {
        s.clear();
        s.push('0');
    }
    s
}

/// Serializes a record as exactly one newline-terminated JSON line with
/// fixed key order.
pub fn write_jsonl(record: &DetectionRecord) -> String {
    let mut out = String::with_capacity(64 + record.tracks.len() * 96);
    let _ = write!(out, "{{\"frame_index\":{},\"tracks\":[", record.frame_index);
    for (i, t) in record.tracks.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(
            out,
            "{{\"id\":{},\"label\":\"{}\",\"confidence\":{},\"box\":{{\"x\":{},\"y\":{},\"w\":{},\"h\":{}}},\"coasting\":{}}}",
            t.id,
            t.label,
            fmt_real(t.confidence),
            fmt_real(t.bbox.x),
            fmt_real(t.bbox.y),
            fmt_real(t.bbox.w),
            fmt_real(t.bbox.h),
            t.coasting
        );
    }
    out.push_str("]}\n");
    out
}
