//! Synthesize a moving two-face scene, render a few frames to PPM, and
//! save the scene JSON that the `oracle`/`scripted` replay backends accept
//! via `model_path`.
//!
//! Run: cargo run --example scene_to_ppm

use maskpipe::backend::{render_scene, SceneFace, SceneFile, SceneSpec};
use maskpipe::media::ppm::write_ppm_file;
use maskpipe::{BoundingBox, FrameDims, MaskLabel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = SceneSpec {
        dims: FrameDims::new(640, 360),
        faces: vec![
            SceneFace::new(BoundingBox::new(80.0, 90.0, 72.0, 72.0), MaskLabel::Mask)
                .with_velocity(2.0, 0.5),
            SceneFace::new(BoundingBox::new(420.0, 180.0, 64.0, 64.0), MaskLabel::NoMask)
                .with_velocity(-1.5, 0.0),
        ],
    };

    let out = std::env::temp_dir().join("maskpipe-examples/scene_to_ppm");
    std::fs::create_dir_all(&out)?;

    for index in 0..10u64 {
        let (frame, truth) = render_scene(&scene, index)?;
        let path = out.join(format!("frame_{index:04}.ppm"));
        write_ppm_file(&path, &frame)?;
        println!("frame {index}: {} face(s)", truth.len());
        for (bbox, label) in truth {
            println!(
                "  {label:<8} at ({:.0}, {:.0}) size {:.0}x{:.0}",
                bbox.x, bbox.y, bbox.w, bbox.h
            );
        }
    }

    // The same scene, saved in the form `--detector oracle
    // --detector-model scene.json` understands (dropouts optional).
    let scene_file = SceneFile {
        dims: scene.dims,
        faces: scene.faces.clone(),
        dropouts: vec![],
    };
    let json_path = out.join("scene.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&scene_file)?)?;

    println!("\nwrote frames and {}", json_path.display());
    Ok(())
}
