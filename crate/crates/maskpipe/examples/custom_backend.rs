//! Plugging your own stage-1 model into the pipeline: implement the
//! `Detector` trait (and `Classifier` for stage 2) and hand it to
//! `Pipeline::new`. This is the integration point for a real inference
//! runtime serving an exported model.
//!
//! Run: cargo run --example custom_backend

use std::sync::Arc;

use maskpipe::backend::{BackendError, Detection, Detector, SyntheticClassifier};
use maskpipe::backend::{render_scene, SceneFace, SceneSpec};
use maskpipe::pipeline::{Pipeline, PipelineConfig};
use maskpipe::roi::PreprocessSpec;
use maskpipe::{BoundingBox, Frame, FrameDims, MaskLabel};

/// Toy detector: reports a face wherever a horizontal band of the frame is
/// brighter than its surroundings. A real integration would run model
/// inference here instead.
struct BrightBandDetector;

impl Detector for BrightBandDetector {
    fn detect(&self, frame: &Frame, conf_threshold: f64) -> Result<Vec<Detection>, BackendError> {
        let w = frame.dims.width;
        let h = frame.dims.height;
        let band = h / 8;
        let mut best: Option<(f64, u32)> = None;
        for y0 in (0..h - band).step_by(band as usize) {
            let mut sum = 0u64;
            for y in y0..y0 + band {
                for x in 0..w {
                    sum += frame.get(x, y)[0] as u64;
                }
            }
            let mean = sum as f64 / (band as u64 * w as u64) as f64;
            if best.is_none_or(|(m, _)| mean > m) {
                best = Some((mean, y0));
            }
        }
        let Some((mean, y0)) = best else {
            return Ok(Vec::new());
        };
        let score = (mean / 255.0).clamp(0.0, 1.0);
        if score < conf_threshold {
            return Ok(Vec::new());
        }
        Ok(vec![Detection {
            bbox: BoundingBox::new(
                w as f64 * 0.25,
                y0 as f64,
                w as f64 * 0.5,
                band as f64 * 2.0,
            ),
            score,
        }])
    }

    fn name(&self) -> &str {
        "bright-band"
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = SceneSpec {
        dims: FrameDims::new(320, 240),
        faces: vec![SceneFace::new(
            BoundingBox::new(110.0, 90.0, 80.0, 80.0),
            MaskLabel::NoMask,
        )],
    };
    let (frame, _) = render_scene(&scene, 0)?;

    let pipeline = Pipeline::new(
        PipelineConfig {
            tracking_enabled: false,
            // The toy detector's scores sit just above 0.45 on this scene.
            detector_threshold: 0.45,
            ..Default::default()
        },
        Arc::new(BrightBandDetector),
        Arc::new(SyntheticClassifier::new(PreprocessSpec::default())),
    )?;

    let result = pipeline.process_image(&frame)?;
    println!(
        "custom detector produced {} region(s) through the standard pipeline:",
        result.tracks.len()
    );
    for t in &result.tracks {
        println!(
            "  {} conf {:.2} box ({:.0}, {:.0}, {:.0}, {:.0})",
            t.label, t.confidence, t.bbox.x, t.bbox.y, t.bbox.w, t.bbox.h
        );
    }
    Ok(())
}
