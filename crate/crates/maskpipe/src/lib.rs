//! Two-stage face-mask detection pipeline for images and video streams.
//!
//! Stage 1 localizes faces, stage 2 classifies each face crop as `Mask` or
//! `No_Mask`. Between the stages, every detected box is expanded by a
//! configurable ratio (20% by default), clamped, cropped, resized and
//! normalized, then batched for one classifier call. On streams, a centroid
//! tracker carries identities across frames and keeps emitting cached boxes
//! through short detector dropouts (up to five missed frames by default).
//!
//! Both stages are pluggable behind the [`backend::Detector`] and
//! [`backend::Classifier`] traits. Deterministic built-in backends (ground
//! truth replay, pixel scanning, marker classification) make the whole
//! pipeline testable without model weights; ONNX model files are validated
//! against their declared tensor signature and served by whatever runtime
//! you implement the traits over.
//!
//! Start with the runnable examples:
//!
//! ```text
//! cargo run --example scene_to_ppm        # synthesize a scene, write PPM frames
//! cargo run --example image_pipeline      # detect + classify one frame
//! cargo run --example stream_tracking     # tracking through detector dropouts
//! cargo run --example custom_backend      # plug in your own detector
//! cargo run --example y4m_ingest          # decode Y4M, run the stream pipeline
//! cargo run --example latency_bench       # per-stage timing grid
//! cargo run --example dataset_prep        # extract face ROIs from raw images
//! ```
//!
//! The `maskpipe` binary exposes the same capabilities as subcommands
//! (`image`, `stream`, `bench`, `prepare-dataset`).

pub mod backend;
pub mod bench;
pub mod config;
pub mod dataset;
pub mod frame;
pub mod geom;
pub mod media;
pub mod pipeline;
pub mod roi;
pub mod tracker;

mod annotate;

pub use backend::{
    load_backend, BackendError, BackendHandle, BackendKind, BackendSpec, Classification,
    Classifier, Detection, Detector,
};
pub use frame::{Frame, MaskLabel};
pub use geom::{clamp_box, centroid, iou, BoundingBox, FrameDims, Point2D};
pub use pipeline::{FrameResult, Pipeline, PipelineConfig, PipelineError, StageTimings, StreamSummary};
pub use roi::{expand_box, process_detections, PreprocessSpec, TensorBatch};
pub use tracker::{Tracker, TrackerConfig, TrackOutput};
