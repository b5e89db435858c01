//! Per-stage latency across resolutions: warmup, per-iteration monotonic
//! sampling, mean/p50/p95 table. The pixel-scanning detector makes the
//! detect stage scale visibly with raster size.
//!
//! Run: cargo run --release --example latency_bench

use std::sync::Arc;

use maskpipe::backend::{ScanDetector, SyntheticClassifier};
use maskpipe::bench::{run_benchmark, BenchConfig};
use maskpipe::pipeline::{Pipeline, PipelineConfig};
use maskpipe::roi::PreprocessSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pipeline = Pipeline::new(
        PipelineConfig::default(),
        Arc::new(ScanDetector::default()),
        Arc::new(SyntheticClassifier::new(PreprocessSpec::default())),
    )?;

    let cfg = BenchConfig {
        iterations: 30,
        warmup: 3,
        ..Default::default() // 480p / 720p / 1080p, all four stages
    };
    let report = run_benchmark(&cfg, &pipeline)?;
    print!("{}", report.to_text_table());

    let json = serde_json::to_string_pretty(&report)?;
    let out = std::env::temp_dir().join("maskpipe-examples");
    std::fs::create_dir_all(&out)?;
    let path = out.join("bench_report.json");
    std::fs::write(&path, json)?;
    println!("\nwrote {}", path.display());
    Ok(())
}
