//! Dataset ROI extraction: run the detector plus the ROI block over a
//! directory of raw images and write each face out as a 224x224 crop,
//! ready for classifier training elsewhere. Crops are images, not
//! normalized tensors.
//!
//! Run: cargo run --example dataset_prep

use std::sync::Arc;

use maskpipe::backend::{render_scene, ScanDetector, SceneFace, SceneSpec, SyntheticClassifier};
use maskpipe::dataset::prepare_dataset;
use maskpipe::media::ppm::write_ppm_file;
use maskpipe::pipeline::{Pipeline, PipelineConfig};
use maskpipe::roi::PreprocessSpec;
use maskpipe::{BoundingBox, FrameDims, MaskLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = std::env::temp_dir().join("maskpipe-examples/dataset_prep");
    let raw = base.join("raw");
    let out = base.join("roi");
    std::fs::create_dir_all(&raw)?;

    // A small synthetic "photo collection".
    for (i, n_faces) in [2usize, 1, 3].iter().enumerate() {
        let faces = (0..*n_faces)
            .map(|k| {
                let label = if (i + k) % 2 == 0 {
                    MaskLabel::Mask
                } else {
                    MaskLabel::NoMask
                };
                SceneFace::new(
                    BoundingBox::new(40.0 + 150.0 * k as f64, 60.0 + 30.0 * k as f64, 70.0, 70.0),
                    label,
                )
            })
            .collect();
        let scene = SceneSpec {
            dims: FrameDims::new(560, 300),
            faces,
        };
        let (frame, _) = render_scene(&scene, 0)?;
        write_ppm_file(&raw.join(format!("photo_{i}.ppm")), &frame)?;
    }

    let pipeline = Pipeline::new(
        PipelineConfig::default(),
        Arc::new(ScanDetector::default()),
        Arc::new(SyntheticClassifier::new(PreprocessSpec::default())),
    )?;

    let counts = prepare_dataset(&raw, &out, &pipeline)?;
    println!(
        "images_in: {}  faces_out: {}  skipped: {}",
        counts.images_in, counts.faces_out, counts.skipped
    );
    for entry in std::fs::read_dir(&out)? {
        println!("  {}", entry?.path().display());
    }
    Ok(())
}
