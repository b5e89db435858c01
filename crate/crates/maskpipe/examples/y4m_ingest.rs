//! Decode a YUV4MPEG2 stream and drive the full pipeline over it, writing
//! JSONL records. The clip is generated in memory (BT.601 gray with a
//! bright moving square) so no input files are needed; any `.y4m` produced
//! by a transcoder works the same way through `open_source`.
//!
//! Run: cargo run --example y4m_ingest

use std::io::BufReader;
use std::sync::Arc;

use maskpipe::backend::{ScanDetector, SyntheticClassifier};
use maskpipe::media::FrameSource;
use maskpipe::pipeline::{Pipeline, PipelineConfig, StreamSink};
use maskpipe::roi::PreprocessSpec;

/// Hand-built 4:2:0 clip: flat mid-gray luma with one bright square moving
/// right. In limited-range BT.601, Y=126/Cb=Cr=128 decodes to RGB
/// (128,128,128); telling the scan detector that gray is the background
/// leaves the square as the only foreground object.
fn synthesize_y4m(frames: u32, w: usize, h: usize) -> Vec<u8> {
    let mut out = format!("YUV4MPEG2 W{w} H{h} F30:1 C420\n").into_bytes();
    for f in 0..frames {
        out.extend_from_slice(b"FRAME\n");
        let mut y = vec![126u8; w * h];
        let (sq, x0, y0) = (h / 3, 8 + 3 * f as usize, h / 3);
        for row in y0..(y0 + sq).min(h) {
            for col in x0..(x0 + sq).min(w) {
                y[row * w + col] = 235;
            }
        }
        out.extend_from_slice(&y);
        out.extend_from_slice(&vec![128u8; (w / 2) * (h / 2)]); // Cb
        out.extend_from_slice(&vec![128u8; (w / 2) * (h / 2)]); // Cr
    }
    out
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clip = synthesize_y4m(12, 192, 108);
    let reader = Box::new(BufReader::new(std::io::Cursor::new(clip)));
    let mut source = FrameSource::from_y4m(reader)?;
    println!("stream rate: {} fps", source.fps());

    let pipeline = Pipeline::new(
        PipelineConfig {
            annotate: false,
            ..Default::default()
        },
        Arc::new(ScanDetector::new([128, 128, 128], 3)),
        Arc::new(SyntheticClassifier::new(PreprocessSpec {
            target_width: 64,
            target_height: 64,
            ..Default::default()
        })),
    )?;

    let mut jsonl = Vec::new();
    let mut sink = StreamSink {
        jsonl: Some(&mut jsonl),
        frames_dir: None,
    };
    let summary = pipeline.run_stream(&mut source, &mut sink)?;
    println!("{summary}");
    println!("\nfirst three records:");
    for line in std::str::from_utf8(&jsonl)?.lines().take(3) {
        println!("  {line}");
    }
    Ok(())
}
