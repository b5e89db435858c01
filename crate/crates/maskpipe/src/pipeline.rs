//! End-to-end orchestration: detect, preprocess ROIs, classify, track,
//! annotate, for single images and for ordered frame streams.
//!
//! The boxes a result carries are the expanded clamped ROI boxes: they are
//! what the classifier actually saw and what the tracker caches. A config
//! flag switches back to raw detector boxes for side-by-side comparison.

use std::io::Write;
use std::path::PathBuf;
use std::sync::mpsc;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotate;
use crate::backend::{BackendError, Classification, Classifier, Detection, Detector};
use crate::frame::{Frame, MaskLabel};
use crate::geom::clamp_box;
use crate::media::jsonl::{write_jsonl, DetectionRecord};
use crate::media::ppm::write_ppm_file;
use crate::media::{FrameSource, MediaError};
use crate::roi::{process_detections, RoiError};
use crate::tracker::{Tracker, TrackerConfig, TrackerError, TrackOutput};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Minimum detector score kept from stage 1.
    pub detector_threshold: f64,
    /// Decision threshold on p(Mask) in stage 2.
    pub classifier_threshold: f64,
    /// Box growth applied before cropping; 0.20 scales each side by 1.2.
    pub expansion_ratio: f64,
    pub tracker: TrackerConfig,
    /// Carry identities across frames. Streams default to tracking on;
    /// single images bypass the tracker regardless.
    pub tracking_enabled: bool,
    pub annotate: bool,
    /// Draw coasting tracks with a thin border instead of the full one.
    pub draw_coasting_distinct: bool,
    /// Emit raw detector boxes instead of expanded ROI boxes.
    pub draw_raw_boxes: bool,
    /// Overlap decoding of the next frame with inference on the current
    /// one. Results still reach the tracker strictly in index order.
    pub pipelined_decode: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            detector_threshold: 0.5,
            classifier_threshold: 0.5,
            expansion_ratio: 0.20,
            tracker: TrackerConfig::default(),
            tracking_enabled: true,
            annotate: true,
            draw_coasting_distinct: true,
            draw_raw_boxes: false,
            pipelined_decode: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.detector_threshold) {
            return Err(PipelineError::InvalidConfig(format!(
                "detector_threshold {} outside [0, 1]",
                self.detector_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.classifier_threshold) {
            return Err(PipelineError::InvalidConfig(format!(
                "classifier_threshold {} outside [0, 1]",
                self.classifier_threshold
            )));
        }
        if !self.expansion_ratio.is_finite() || self.expansion_ratio < 0.0 {
            return Err(PipelineError::InvalidConfig(format!(
                "expansion_ratio {} must be >= 0",
                self.expansion_ratio
            )));
        }
        Ok(())
    }
}

/// Wall-clock milliseconds per executed stage. Stages that did not run
/// (tracking on single images, annotation when disabled) stay `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimings {
    pub detect_ms: f64,
    pub roi_ms: f64,
    pub classify_ms: f64,
    pub track_ms: Option<f64>,
    pub annotate_ms: Option<f64>,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.detect_ms
            + self.roi_ms
            + self.classify_ms
            + self.track_ms.unwrap_or(0.0)
            + self.annotate_ms.unwrap_or(0.0)
    }
}

/// Output of one processed frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_index: u64,
    /// Live tracks sorted by id, or raw classified detections when
    /// tracking is off (ids are then per-frame positions).
    pub tracks: Vec<TrackOutput>,
    /// Detections dropped because their crop rounded to zero area.
    pub skipped_rois: usize,
    pub timings: StageTimings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Detect,
    Roi,
    Classify,
    Track,
    Annotate,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stage::Detect => "detect",
            Stage::Roi => "roi",
            Stage::Classify => "classify",
            Stage::Track => "track",
            Stage::Annotate => "annotate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{stage} stage failed: {source}")]
    Backend {
        stage: Stage,
        source: BackendError,
    },
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error(transparent)]
    Roi(#[from] RoiError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
}

/// Totals over one stream run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StreamSummary {
    pub frames: u64,
    /// Total track emissions across frames (coasting included).
    pub faces: u64,
    pub mask: u64,
    pub no_mask: u64,
    pub skipped_rois: u64,
    pub mean_fps: f64,
    pub mean_detect_ms: f64,
    pub mean_roi_ms: f64,
    pub mean_classify_ms: f64,
    pub mean_track_ms: Option<f64>,
    pub mean_annotate_ms: Option<f64>,
}

/// Where a stream run writes its outputs. Both parts are optional.
#[derive(Default)]
pub struct StreamSink<'a> {
    pub jsonl: Option<&'a mut dyn Write>,
    /// Annotated frames land here as `frame_NNNNNN.ppm`.
    pub frames_dir: Option<PathBuf>,
}

/// Mutable per-stream state; one per ordered stream, never shared.
pub struct StreamState {
    tracker: Tracker,
    last_index: Option<u64>,
}

/// Classified detections for one frame plus the skipped-crop tally and
/// stage timings.
type ClassifiedFrame = (Vec<(Detection, Classification)>, usize, StageTimings);

/// A configured detector/classifier pair. The pipeline itself is immutable
/// and can serve multiple concurrent streams, each with its own
/// [`StreamState`].
pub struct Pipeline {
    cfg: PipelineConfig,
    detector: Arc<dyn Detector>,
    classifier: Arc<dyn Classifier>,
}

impl Pipeline {
    pub fn new(
        cfg: PipelineConfig,
        detector: Arc<dyn Detector>,
        classifier: Arc<dyn Classifier>,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        Tracker::new(cfg.tracker.clone())?;
        classifier
            .preprocess()
            .validate()
            .map_err(PipelineError::Roi)?;
        Ok(Pipeline {
            cfg,
            detector,
            classifier,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn detector(&self) -> &Arc<dyn Detector> {
        &self.detector
    }

    pub fn classifier(&self) -> &Arc<dyn Classifier> {
        &self.classifier
    }

    /// Stage 1 + ROI block + stage 2 for one frame. Returns classified
    /// detections carrying the boxes chosen by config (ROI or raw, both
    /// clamped), the skipped-crop tally, and per-stage timings.
    fn classify_frame(&self, frame: &Frame) -> Result<ClassifiedFrame, PipelineError> {
        let t = Instant::now();
        let dets = self
            .detector
            .detect(frame, self.cfg.detector_threshold)
            .map_err(|source| PipelineError::Backend {
                stage: Stage::Detect,
                source,
            })?;
        let detect_ms = ms_since(t);

        let t = Instant::now();
        let batch = process_detections(
            frame,
            &dets,
            self.classifier.preprocess(),
            self.cfg.expansion_ratio,
        )?;
        let roi_ms = ms_since(t);

        let t = Instant::now();
        let classes = self
            .classifier
            .classify_batch(&batch, self.cfg.classifier_threshold)
            .map_err(|source| PipelineError::Backend {
                stage: Stage::Classify,
                source,
            })?;
        let classify_ms = ms_since(t);

        let skipped = batch.skipped.len();
        let pairs = batch
            .provenance
            .iter()
            .zip(classes)
            .map(|((det, roi_box), cls)| {
                let bbox = if self.cfg.draw_raw_boxes {
                    clamp_box(&det.bbox, frame.dims)
                } else {
                    *roi_box
                };
                (
                    Detection {
                        bbox,
                        score: det.score,
                    },
                    cls,
                )
            })
            .collect();
        Ok((
            pairs,
            skipped,
            StageTimings {
                detect_ms,
                roi_ms,
                classify_ms,
                track_ms: None,
                annotate_ms: None,
            },
        ))
    }

    /// Single-image mode: the tracker is bypassed and outputs are the
    /// frame's classified detections in detection order.
    pub fn process_image(&self, frame: &Frame) -> Result<FrameResult, PipelineError> {
        let (pairs, skipped_rois, timings) = self.classify_frame(frame)?;
        let tracks = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (det, cls))| TrackOutput {
                id: i as u64,
                bbox: det.bbox,
                label: cls.label,
                confidence: cls.confidence,
                coasting: false,
            })
            .collect();
        Ok(FrameResult {
            frame_index: frame.index,
            tracks,
            skipped_rois,
            timings,
        })
    }

    pub fn new_stream(&self) -> Result<StreamState, PipelineError> {
        Ok(StreamState {
            tracker: Tracker::new(self.cfg.tracker.clone())?,
            last_index: None,
        })
    }

    /// Stream mode: classify the frame, then let the tracker assign
    /// identities and coast through misses. Frames must arrive in strictly
    /// increasing index order.
    pub fn process_stream_frame(
        &self,
        state: &mut StreamState,
        frame: &Frame,
    ) -> Result<FrameResult, PipelineError> {
        if let Some(last) = state.last_index {
            if frame.index <= last {
                return Err(TrackerError::OutOfOrderFrame {
                    last,
                    got: frame.index,
                }
                .into());
            }
        }
        state.last_index = Some(frame.index);

        if !self.cfg.tracking_enabled {
            return self.process_image(frame);
        }
        let (pairs, skipped_rois, mut timings) = self.classify_frame(frame)?;
        let t = Instant::now();
        let tracks = state.tracker.update(frame.index, &pairs, frame.dims)?;
        timings.track_ms = Some(ms_since(t));
        Ok(FrameResult {
            frame_index: frame.index,
            tracks,
            skipped_rois,
            timings,
        })
    }

    /// Annotated copy of `frame` with the given results drawn in.
    pub fn annotate(&self, frame: &Frame, results: &[TrackOutput]) -> Frame {
        annotate::annotate(frame, results, self.cfg.draw_coasting_distinct)
    }

    /// Drives the full pipeline over a frame source, writing JSONL records
    /// and (optionally) annotated frames. Source exhaustion is the normal
    /// termination; decode errors abort with their frame index.
    pub fn run_stream(
        &self,
        source: &mut FrameSource,
        sink: &mut StreamSink,
    ) -> Result<StreamSummary, PipelineError> {
        let mut state = self.new_stream()?;
        let mut acc = SummaryAccumulator::default();
        let started = Instant::now();

        let mut step = |frame: Frame,
                        state: &mut StreamState,
                        sink: &mut StreamSink|
         -> Result<(), PipelineError> {
            let mut result = self.process_stream_frame(state, &frame)?;
            if self.cfg.annotate {
                if let Some(dir) = &sink.frames_dir {
                    let t = Instant::now();
                    let annotated = self.annotate(&frame, &result.tracks);
                    result.timings.annotate_ms = Some(ms_since(t));
                    let name = format!("frame_{:06}.ppm", result.frame_index);
                    write_ppm_file(&dir.join(name), &annotated).map_err(PipelineError::Media)?;
                }
            }
            if let Some(w) = sink.jsonl.as_deref_mut() {
                let record = DetectionRecord::from_outputs(result.frame_index, &result.tracks);
                w.write_all(write_jsonl(&record).as_bytes())
                    .map_err(|e| PipelineError::Media(MediaError::Io(e)))?;
            }
            acc.add(&result);
            Ok(())
        };

        if self.cfg.pipelined_decode {
            // Two-slot decode-ahead: a thread pulls frames while the main
            // thread runs inference; the channel keeps index order intact.
            std::thread::scope(|scope| -> Result<(), PipelineError> {
                let (tx, rx) = mpsc::sync_channel::<Result<Option<Frame>, MediaError>>(2);
                scope.spawn(move || loop {
                    let item = source.next_frame();
                    let stop = !matches!(item, Ok(Some(_)));
                    if tx.send(item).is_err() || stop {
                        break;
                    }
                });
                while let Ok(item) = rx.recv() {
                    match item? {
                        Some(frame) => step(frame, &mut state, sink)?,
                        None => break,
                    }
                }
                Ok(())
            })?;
        } else {
            while let Some(frame) = source.next_frame()? {
                step(frame, &mut state, sink)?;
            }
        }

        Ok(acc.finish(started))
    }
}

#[inline]
fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

#[derive(Default)]
struct SummaryAccumulator {
    frames: u64,
    faces: u64,
    mask: u64,
    no_mask: u64,
    skipped_rois: u64,
    detect_ms: f64,
    roi_ms: f64,
    classify_ms: f64,
    track_ms: f64,
    track_frames: u64,
    annotate_ms: f64,
    annotate_frames: u64,
}

impl SummaryAccumulator {
    fn add(&mut self, r: &FrameResult) {
        self.frames += 1;
        self.faces += r.tracks.len() as u64;
        for t in &r.tracks {
            match t.label {
                MaskLabel::Mask => self.mask += 1,
                MaskLabel::NoMask => self.no_mask += 1,
            }
        }
        self.skipped_rois += r.skipped_rois as u64;
        self.detect_ms += r.timings.detect_ms;
        self.roi_ms += r.timings.roi_ms;
        self.classify_ms += r.timings.classify_ms;
        if let Some(t) = r.timings.track_ms {
            self.track_ms += t;
            self.track_frames += 1;
        }
        if let Some(t) = r.timings.annotate_ms {
            self.annotate_ms += t;
            self.annotate_frames += 1;
        }
    }

    fn finish(self, started: Instant) -> StreamSummary {
        let n = self.frames.max(1) as f64;
        let elapsed = started.elapsed().as_secs_f64();
        StreamSummary {
            frames: self.frames,
            faces: self.faces,
            mask: self.mask,
            no_mask: self.no_mask,
            skipped_rois: self.skipped_rois,
            mean_fps: if elapsed > 0.0 {
                self.frames as f64 / elapsed
            } else {
                0.0
            },
            mean_detect_ms: self.detect_ms / n,
            mean_roi_ms: self.roi_ms / n,
            mean_classify_ms: self.classify_ms / n,
            mean_track_ms: (self.track_frames > 0)
                .then(|| self.track_ms / self.track_frames as f64),
            mean_annotate_ms: (self.annotate_frames > 0)
                .then(|| self.annotate_ms / self.annotate_frames as f64),
        }
    }
}

impl std::fmt::Display for StreamSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "frames: {}  faces: {} (mask {}, no_mask {}, skipped rois {})",
            self.frames, self.faces, self.mask, self.no_mask, self.skipped_rois
        )?;
        writeln!(f, "mean fps: {:.2}", self.mean_fps)?;
        write!(
            f,
            "mean stage ms: detect {:.3}  roi {:.3}  classify {:.3}",
            self.mean_detect_ms, self.mean_roi_ms, self.mean_classify_ms
        )?;
        if let Some(t) = self.mean_track_ms {
            write!(f, "  track {t:.3}")?;
        }
        if let Some(t) = self.mean_annotate_ms {
            write!(f, "  annotate {t:.3}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{
        render_scene, DropoutSchedule, OracleDetector, SceneFace, SceneSpec, ScriptedDetector,
        SyntheticClassifier,
    };
    use crate::geom::{iou, BoundingBox, FrameDims};
    use crate::roi::{expand_box, PreprocessSpec};

    fn scene() -> SceneSpec {
        SceneSpec {
            dims: FrameDims::new(320, 240),
            faces: vec![
                SceneFace::new(BoundingBox::new(40.0, 50.0, 56.0, 56.0), MaskLabel::Mask),
                SceneFace::new(
                    BoundingBox::new(200.0, 120.0, 48.0, 48.0),
                    MaskLabel::NoMask,
                ),
            ],
        }
    }

    fn preprocess() -> PreprocessSpec {
        PreprocessSpec {
            target_width: 96,
            target_height: 96,
            ..Default::default()
        }
    }

    fn oracle_pipeline(cfg: PipelineConfig, s: &SceneSpec) -> Pipeline {
        Pipeline::new(
            cfg,
            Arc::new(OracleDetector::new(s.clone())),
            Arc::new(SyntheticClassifier::new(preprocess())),
        )
        .unwrap()
    }

    #[test]
    fn process_image_classifies_both_faces() {
        let s = scene();
        let (frame, truth) = render_scene(&s, 0).unwrap();
        let p = oracle_pipeline(PipelineConfig::default(), &s);
        let res = p.process_image(&frame).unwrap();
        assert_eq!(res.tracks.len(), 2);
        for out in &res.tracks {
            assert_eq!(out.confidence, 1.0);
            assert!(!out.coasting);
            let (gt_box, gt_label) = truth
                .iter()
                .max_by(|a, b| {
                    iou(&a.0, &out.bbox)
                        .partial_cmp(&iou(&b.0, &out.bbox))
                        .unwrap()
                })
                .unwrap();
            assert_eq!(out.label, *gt_label);
            let expanded = expand_box(gt_box, 0.20, frame.dims);
            assert!(iou(&out.bbox, &expanded) > 0.999);
        }
    }

    #[test]
    fn empty_frame_still_reports_timings() {
        let s = SceneSpec {
            dims: FrameDims::new(64, 64),
            faces: vec![],
        };
        let (frame, _) = render_scene(&s, 0).unwrap();
        let p = oracle_pipeline(PipelineConfig::default(), &s);
        let res = p.process_image(&frame).unwrap();
        assert!(res.tracks.is_empty());
        assert!(res.timings.detect_ms >= 0.0);
        assert!(res.timings.roi_ms >= 0.0);
        assert!(res.timings.classify_ms >= 0.0);
        assert!(res.timings.track_ms.is_none());
    }

    #[test]
    fn timings_bounded_by_wall_clock() {
        let s = scene();
        let (frame, _) = render_scene(&s, 0).unwrap();
        let p = oracle_pipeline(PipelineConfig::default(), &s);
        let wall = Instant::now();
        let res = p.process_image(&frame).unwrap();
        let wall_ms = wall.elapsed().as_secs_f64() * 1e3;
        assert!(res.timings.total_ms() <= wall_ms + 1.0);
    }

    #[test]
    fn invalid_thresholds_rejected() {
        let s = scene();
        let cfg = PipelineConfig {
            detector_threshold: 1.0 + 1e-9,
            ..Default::default()
        };
        let err = Pipeline::new(
            cfg,
            Arc::new(OracleDetector::new(s.clone())),
            Arc::new(SyntheticClassifier::new(preprocess())),
        )
        .err()
        .unwrap();
        assert!(matches!(err, PipelineError::InvalidConfig(_)));
    }

    #[test]
    fn edge_face_dropped_and_tallied() {
        // Face hugging the right edge whose clamped crop rounds to zero
        // width: excluded from results, counted as skipped.
        let s = SceneSpec {
            dims: FrameDims::new(100, 100),
            faces: vec![SceneFace::new(
                BoundingBox::new(99.8, 10.0, 30.0, 30.0),
                MaskLabel::Mask,
            )],
        };
        let (frame, _) = render_scene(&s, 0).unwrap();
        // Oracle reports the clamped sliver (w=0.2); its crop rounds empty.
        let p = oracle_pipeline(PipelineConfig::default(), &s);
        let res = p.process_image(&frame).unwrap();
        assert!(res.tracks.is_empty());
        assert_eq!(res.skipped_rois, 1);
    }

    #[test]
    fn stream_coasts_through_dropout() {
        let s = scene();
        let schedule = DropoutSchedule::drop_face_over(0, 10..14);
        let detector = ScriptedDetector::new(s.clone(), schedule).unwrap();
        let p = Pipeline::new(
            PipelineConfig::default(),
            Arc::new(detector),
            Arc::new(SyntheticClassifier::new(preprocess())),
        )
        .unwrap();
        let mut state = p.new_stream().unwrap();
        let mut ids_face0 = std::collections::BTreeSet::new();
        for idx in 0..20u64 {
            let (frame, _) = render_scene(&s, idx).unwrap();
            let res = p.process_stream_frame(&mut state, &frame).unwrap();
            assert_eq!(res.tracks.len(), 2, "frame {idx} must keep both tracks");
            let face0 = res
                .tracks
                .iter()
                .find(|t| t.bbox.x < 150.0)
                .expect("left face present");
            ids_face0.insert(face0.id);
            assert_eq!(face0.coasting, (10..14).contains(&idx));
        }
        assert_eq!(ids_face0.len(), 1, "identity must survive the dropout");
    }

    #[test]
    fn tracking_disabled_drops_face_during_gap() {
        let s = scene();
        let schedule = DropoutSchedule::drop_face_over(0, 10..14);
        let detector = ScriptedDetector::new(s.clone(), schedule).unwrap();
        let cfg = PipelineConfig {
            tracking_enabled: false,
            ..Default::default()
        };
        let p = Pipeline::new(
            cfg,
            Arc::new(detector),
            Arc::new(SyntheticClassifier::new(preprocess())),
        )
        .unwrap();
        let mut state = p.new_stream().unwrap();
        for idx in 0..20u64 {
            let (frame, _) = render_scene(&s, idx).unwrap();
            let res = p.process_stream_frame(&mut state, &frame).unwrap();
            let want = if (10..14).contains(&idx) { 1 } else { 2 };
            assert_eq!(res.tracks.len(), want, "frame {idx}");
            assert!(res.timings.track_ms.is_none());
        }
    }

    #[test]
    fn crossing_faces_keep_ids_when_separated_beyond_gate() {
        // Two faces pass each other horizontally while staying 160 px apart
        // vertically, well over the default gate (10% of the diagonal,
        // ~73 px here); identities must never swap.
        let s = SceneSpec {
            dims: FrameDims::new(640, 360),
            faces: vec![
                SceneFace::new(BoundingBox::new(40.0, 40.0, 48.0, 48.0), MaskLabel::Mask)
                    .with_velocity(2.5, 0.0),
                SceneFace::new(BoundingBox::new(560.0, 248.0, 48.0, 48.0), MaskLabel::NoMask)
                    .with_velocity(-2.5, 0.0),
            ],
        };
        let p = oracle_pipeline(PipelineConfig::default(), &s);
        let mut state = p.new_stream().unwrap();
        for idx in 0..100u64 {
            let (frame, _) = render_scene(&s, idx).unwrap();
            let res = p.process_stream_frame(&mut state, &frame).unwrap();
            assert_eq!(res.tracks.len(), 2, "frame {idx}");
            let top = res.tracks.iter().find(|t| t.bbox.y < 150.0).unwrap();
            let bottom = res.tracks.iter().find(|t| t.bbox.y > 150.0).unwrap();
            assert_eq!(top.id, 0, "frame {idx}: top face swapped id");
            assert_eq!(bottom.id, 1, "frame {idx}: bottom face swapped id");
            assert_eq!(top.label, MaskLabel::Mask);
            assert_eq!(bottom.label, MaskLabel::NoMask);
        }
    }

    #[test]
    fn out_of_order_stream_frame_rejected() {
        let s = scene();
        let p = oracle_pipeline(PipelineConfig::default(), &s);
        let mut state = p.new_stream().unwrap();
        let (mut frame, _) = render_scene(&s, 5).unwrap();
        p.process_stream_frame(&mut state, &frame).unwrap();
        frame.index = 5;
        assert!(p.process_stream_frame(&mut state, &frame).is_err());
    }

    #[test]
    fn run_stream_writes_records_and_totals() {
        let s = scene();
        let p = oracle_pipeline(
            PipelineConfig {
                annotate: false,
                ..Default::default()
            },
            &s,
        );
        let mut frames: Vec<Frame> = (0..30).map(|i| render_scene(&s, i).unwrap().0).collect();
        // Feed via an in-memory "stream" by reusing the single-image setup
        // per frame through run_stream's source abstraction: simplest is an
        // image dir, but a manual loop exercising process_stream_frame plus
        // JSONL writing covers the same path; keep the directory round trip
        // for the CLI tests. Here: temp dir of PPMs.
        let tmp = tempfile::tempdir().unwrap();
        for f in frames.drain(..) {
            let name = format!("f_{:04}.ppm", f.index);
            crate::media::ppm::write_ppm_file(&tmp.path().join(name), &f).unwrap();
        }
        let mut src = crate::media::read_image_dir(tmp.path()).unwrap();
        let mut jsonl: Vec<u8> = Vec::new();
        let mut sink = StreamSink {
            jsonl: Some(&mut jsonl),
            frames_dir: None,
        };
        let summary = p.run_stream(&mut src, &mut sink).unwrap();
        assert_eq!(summary.frames, 30);
        assert_eq!(summary.faces, 60);
        assert_eq!(summary.mask, 30);
        assert_eq!(summary.no_mask, 30);
        let lines: Vec<&str> = std::str::from_utf8(&jsonl)
            .unwrap()
            .lines()
            .collect();
        assert_eq!(lines.len(), 30);
        let rec = DetectionRecord::parse(lines[7]).unwrap();
        assert_eq!(rec.frame_index, 7);
        assert_eq!(rec.tracks.len(), 2);
    }

    #[test]
    fn pipelined_decode_matches_serial_output() {
        let s = scene();
        let mk = |pipelined: bool| {
            let p = oracle_pipeline(
                PipelineConfig {
                    annotate: false,
                    pipelined_decode: pipelined,
                    ..Default::default()
                },
                &s,
            );
            let tmp = tempfile::tempdir().unwrap();
            for i in 0..12u64 {
                let (f, _) = render_scene(&s, i).unwrap();
                crate::media::ppm::write_ppm_file(
                    &tmp.path().join(format!("f_{i:04}.ppm")),
                    &f,
                )
                .unwrap();
            }
            let mut src = crate::media::read_image_dir(tmp.path()).unwrap();
            let mut jsonl: Vec<u8> = Vec::new();
            let mut sink = StreamSink {
                jsonl: Some(&mut jsonl),
                frames_dir: None,
            };
            p.run_stream(&mut src, &mut sink).unwrap();
            jsonl
        };
        assert_eq!(mk(false), mk(true));
    }
}
