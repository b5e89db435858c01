//! Detect and classify every face in a single frame: stage 1, ROI
//! preprocessing, stage 2, annotation. Uses the ground-truth replay
//! detector and the marker classifier so the example is self-contained.
//!
//! Run: cargo run --example image_pipeline

use std::sync::Arc;

use maskpipe::backend::{render_scene, OracleDetector, SceneFace, SceneSpec, SyntheticClassifier};
use maskpipe::media::ppm::write_ppm_file;
use maskpipe::pipeline::{Pipeline, PipelineConfig};
use maskpipe::roi::PreprocessSpec;
use maskpipe::{BoundingBox, FrameDims, MaskLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = SceneSpec {
        dims: FrameDims::new(640, 360),
        faces: vec![
            SceneFace::new(BoundingBox::new(60.0, 70.0, 90.0, 90.0), MaskLabel::Mask),
            SceneFace::new(BoundingBox::new(260.0, 140.0, 80.0, 80.0), MaskLabel::NoMask),
            SceneFace::new(BoundingBox::new(470.0, 60.0, 84.0, 84.0), MaskLabel::Mask),
        ],
    };
    let (frame, _) = render_scene(&scene, 0)?;

    let pipeline = Pipeline::new(
        PipelineConfig {
            tracking_enabled: false, // single image: no identities to carry
            ..Default::default()
        },
        Arc::new(OracleDetector::new(scene)),
        Arc::new(SyntheticClassifier::new(PreprocessSpec::default())),
    )?;

    let result = pipeline.process_image(&frame)?;
    println!("{} face(s) found", result.tracks.len());
    for t in &result.tracks {
        println!(
            "  {:<8} conf {:.2}  roi box ({:.1}, {:.1}, {:.1}, {:.1})",
            t.label.to_string(),
            t.confidence,
            t.bbox.x,
            t.bbox.y,
            t.bbox.w,
            t.bbox.h
        );
    }
    println!(
        "stage ms: detect {:.3}, roi {:.3}, classify {:.3}",
        result.timings.detect_ms, result.timings.roi_ms, result.timings.classify_ms
    );

    let out = std::env::temp_dir().join("maskpipe-examples/image_pipeline");
    std::fs::create_dir_all(&out)?;
    let path = out.join("annotated.ppm");
    write_ppm_file(&path, &pipeline.annotate(&frame, &result.tracks))?;
    println!("wrote {}", path.display());
    Ok(())
}
