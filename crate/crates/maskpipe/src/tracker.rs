//! Frame-to-frame identity tracking by nearest centroid.
//!
//! Matched tracks take on the new detection's box; unmatched tracks keep
//! emitting their cached box ("coasting") until they have been missing for
//! more than `max_disappeared` consecutive frames, at which point they are
//! discarded. Five frames is the default threshold, sized for 30 FPS
//! streams; other frame rates want a proportional value.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{Classification, Detection};
use crate::frame::MaskLabel;
use crate::geom::{clamp_box, BoundingBox, FrameDims, Point2D};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Consecutive missed frames a track survives before discard.
    pub max_disappeared: u32,
    /// Matching gate as a fraction of the frame diagonal; pairs farther
    /// apart than this are never matched.
    pub max_match_distance_frac: f64,
    /// Number of recent (label, confidence) observations kept per track
    /// for display smoothing.
    pub label_history_len: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            max_disappeared: 5,
            max_match_distance_frac: 0.10,
            label_history_len: 5,
        }
    }
}

/// One tracked identity with its cached state.
#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub bbox: BoundingBox,
    pub centroid: Point2D,
    /// 0 when seen this frame; otherwise the length of the current miss run.
    pub frames_since_seen: u32,
    /// Most recent observations, oldest first, capped at
    /// `label_history_len`.
    pub label_history: VecDeque<(MaskLabel, f64)>,
    /// Frames since this track was registered.
    pub age: u64,
}

/// Per-frame emission for one live track.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub bbox: BoundingBox,
    pub label: MaskLabel,
    pub confidence: f64,
    /// True when the box comes from cache rather than a fresh detection.
    pub coasting: bool,
}

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
    #[error("frame {got} arrived after frame {last}; updates must be in stream order")]
    OutOfOrderFrame { last: u64, got: u64 },
    #[error("track has no label history")]
    EmptyHistory,
}

/// Greedy global matching: repeatedly pair the closest (track, detection)
/// centroids within `max_dist`, ties broken by lower track id then lower
/// detection index. Returns `(track_idx, det_idx)` pairs.
pub fn match_tracks(
    tracks: &[Track],
    dets: &[(Detection, Classification)],
    max_dist: f64,
) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, u64, usize, usize)> = Vec::new();
    for (ti, t) in tracks.iter().enumerate() {
        for (di, (d, _)) in dets.iter().enumerate() {
            let dist = t.centroid.distance(&d.bbox.centroid());
            if dist <= max_dist {
                candidates.push((dist, t.id, di, ti));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });

    let mut track_used = vec![false; tracks.len()];
    let mut det_used = vec![false; dets.len()];
    let mut pairs = Vec::new();
    for (_, _, di, ti) in candidates {
        if !track_used[ti] && !det_used[di] {
            track_used[ti] = true;
            det_used[di] = true;
            pairs.push((ti, di));
        }
    }
    pairs
}

/// Majority label over the history ring; a tie goes to the most recent
/// observation. Confidence is the mean confidence of the entries carrying
/// the winning label.
pub fn smooth_label(track: &Track) -> Result<(MaskLabel, f64), TrackerError> {
    let last = track
        .label_history
        .back()
        .ok_or(TrackerError::EmptyHistory)?;
    let mask_n = track
        .label_history
        .iter()
        .filter(|(l, _)| *l == MaskLabel::Mask)
        .count();
    let nomask_n = track.label_history.len() - mask_n;
    let winner = match mask_n.cmp(&nomask_n) {
        std::cmp::Ordering::Greater => MaskLabel::Mask,
        std::cmp::Ordering::Less => MaskLabel::NoMask,
        std::cmp::Ordering::Equal => last.0,
    };
    let (sum, n) = track
        .label_history
        .iter()
        .filter(|(l, _)| *l == winner)
        .fold((0.0, 0usize), |(s, n), (_, c)| (s + c, n + 1));
    Ok((winner, sum / n as f64))
}

/// Mutable tracking state for one stream. Updates must arrive in frame
/// order; distinct streams own distinct trackers.
pub struct Tracker {
    cfg: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u64>,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig) -> Result<Self, TrackerError> {
        if !cfg.max_match_distance_frac.is_finite() || cfg.max_match_distance_frac < 0.0 {
            return Err(TrackerError::InvalidConfig(
                "max_match_distance_frac must be finite and >= 0".into(),
            ));
        }
        if cfg.label_history_len < 1 {
            return Err(TrackerError::InvalidConfig(
                "label_history_len must be >= 1".into(),
            ));
        }
        Ok(Tracker {
            cfg,
            tracks: Vec::new(),
            next_id: 0,
            last_frame: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn live_tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn observe(&mut self, track_idx: usize, det: &Detection, cls: &Classification, dims: FrameDims) {
        let t = &mut self.tracks[track_idx];
        t.bbox = clamp_box(&det.bbox, dims);
        t.centroid = t.bbox.centroid();
        t.frames_since_seen = 0;
        t.label_history.push_back((cls.label, cls.confidence));
        while t.label_history.len() > self.cfg.label_history_len {
            t.label_history.pop_front();
        }
    }

    /// Advances the tracker by one frame of classified detections and emits
    /// every live track, sorted by id.
    pub fn update(
        &mut self,
        frame_index: u64,
        dets: &[(Detection, Classification)],
        dims: FrameDims,
    ) -> Result<Vec<TrackOutput>, TrackerError> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(TrackerError::OutOfOrderFrame {
                    last,
                    got: frame_index,
                });
            }
        }
        self.last_frame = Some(frame_index);

        let gate = self.cfg.max_match_distance_frac * dims.diagonal();
        let pairs = match_tracks(&self.tracks, dets, gate);

        let mut det_matched = vec![false; dets.len()];
        let mut track_matched = vec![false; self.tracks.len()];
        for &(ti, di) in &pairs {
            track_matched[ti] = true;
            det_matched[di] = true;
            self.observe(ti, &dets[di].0, &dets[di].1, dims);
        }

        // Unmatched tracks coast; past the threshold they are dropped.
        let max_disappeared = self.cfg.max_disappeared;
        let mut keep = Vec::with_capacity(self.tracks.len());
        for (ti, mut t) in std::mem::take(&mut self.tracks).into_iter().enumerate() {
            if !track_matched[ti] {
                t.frames_since_seen += 1;
                if t.frames_since_seen > max_disappeared {
                    continue;
                }
            }
            keep.push(t);
        }
        self.tracks = keep;

        // Unmatched detections start new identities; ids are never reused.
        for (di, (det, cls)) in dets.iter().enumerate() {
            if det_matched[di] {
                continue;
            }
            let bbox = clamp_box(&det.bbox, dims);
            let mut history = VecDeque::with_capacity(self.cfg.label_history_len);
            history.push_back((cls.label, cls.confidence));
            self.tracks.push(Track {
                id: self.next_id,
                centroid: bbox.centroid(),
                bbox,
                frames_since_seen: 0,
                label_history: history,
                age: 0,
            });
            self.next_id += 1;
        }

        self.tracks.sort_by_key(|t| t.id);
        let mut out = Vec::with_capacity(self.tracks.len());
        for t in &self.tracks {
            let (label, confidence) = smooth_label(t)?;
            out.push(TrackOutput {
                id: t.id,
                bbox: t.bbox,
                label,
                confidence,
                coasting: t.frames_since_seen > 0,
            });
        }
        for t in &mut self.tracks {
            t.age += 1;
        }
        Ok(out)
    }
}
