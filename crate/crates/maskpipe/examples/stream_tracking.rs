//! Identity tracking through detector dropouts. A scripted detector loses
//! one face for four consecutive frames; the tracker keeps emitting the
//! cached box ("coasting") so the identity survives the gap. Running the
//! same stream with tracking disabled shows the face vanish instead.
//!
//! Run: cargo run --example stream_tracking

use std::sync::Arc;

use maskpipe::backend::{
    render_scene, DropoutSchedule, SceneFace, SceneSpec, ScriptedDetector, SyntheticClassifier,
};
use maskpipe::pipeline::{Pipeline, PipelineConfig};
use maskpipe::roi::PreprocessSpec;
use maskpipe::{BoundingBox, FrameDims, MaskLabel};

fn run(scene: &SceneSpec, dropouts: DropoutSchedule, tracking: bool) {
    let pipeline = Pipeline::new(
        PipelineConfig {
            tracking_enabled: tracking,
            ..Default::default()
        },
        Arc::new(ScriptedDetector::new(scene.clone(), dropouts).unwrap()),
        Arc::new(SyntheticClassifier::new(PreprocessSpec {
            target_width: 112,
            target_height: 112,
            ..Default::default()
        })),
    )
    .unwrap();

    let mut state = pipeline.new_stream().unwrap();
    for index in 0..16u64 {
        let (frame, _) = render_scene(scene, index).unwrap();
        let result = pipeline.process_stream_frame(&mut state, &frame).unwrap();
        let mut line = format!("frame {index:>2}: ");
        for t in &result.tracks {
            line.push_str(&format!(
                "[id {} {} {}] ",
                t.id,
                t.label,
                if t.coasting { "coasting" } else { "detected" }
            ));
        }
        if result.tracks.is_empty() {
            line.push_str("(nothing)");
        }
        println!("{line}");
    }
}

fn main() {
    let scene = SceneSpec {
        dims: FrameDims::new(480, 270),
        faces: vec![
            SceneFace::new(BoundingBox::new(60.0, 60.0, 64.0, 64.0), MaskLabel::Mask)
                .with_velocity(1.2, 0.4),
            SceneFace::new(BoundingBox::new(320.0, 150.0, 56.0, 56.0), MaskLabel::NoMask),
        ],
    };
    // Face 0 disappears from the detector on frames 6..10.
    let dropouts = || DropoutSchedule::drop_face_over(0, 6..10);

    println!("--- with centroid tracking (id 0 coasts through the gap) ---");
    run(&scene, dropouts(), true);
    println!("\n--- without tracking (face vanishes during the gap) ---");
    run(&scene, dropouts(), false);
}
