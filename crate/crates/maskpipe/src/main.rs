//! Thin command-line front end over the `maskpipe` library. All logic
//! lives in the library; this binary parses flags, loads config, and wires
//! sources to sinks. Exit codes: 0 success, 1 runtime failure, 2 usage
//! error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use maskpipe::bench::{run_benchmark, BenchConfig, BenchStage};
use maskpipe::config::{load_config, Overrides, CONFIG_ENV_VAR};
use maskpipe::dataset::prepare_dataset;
use maskpipe::media::jsonl::{write_jsonl, DetectionRecord};
use maskpipe::media::ppm::write_ppm_file;
use maskpipe::media::source::{open_source, read_image_file};
use maskpipe::pipeline::{Pipeline, StreamSink};
use maskpipe::{load_backend, FrameDims};

#[derive(Parser)]
#[command(
    name = "maskpipe",
    version,
    about = "Two-stage face-mask detection over images and video streams"
)]
struct Cli {
    /// JSON config file; falls back to $MASKPIPE_CONFIG when unset.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: FlagOverrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct FlagOverrides {
    /// Detector backend (scan | oracle | scripted | onnx).
    #[arg(long, global = true)]
    detector: Option<String>,
    /// Detector model/scene file.
    #[arg(long, global = true)]
    detector_model: Option<PathBuf>,
    #[arg(long, global = true)]
    detector_threshold: Option<f64>,
    /// Classifier backend (synthetic | onnx).
    #[arg(long, global = true)]
    classifier: Option<String>,
    /// Classifier model file.
    #[arg(long, global = true)]
    classifier_model: Option<PathBuf>,
    #[arg(long, global = true)]
    classifier_threshold: Option<f64>,
    /// ROI expansion ratio (0.20 grows each side by 20%).
    #[arg(long, global = true)]
    expansion: Option<f64>,
    /// Frames a track survives without a detection.
    #[arg(long, global = true)]
    max_disappeared: Option<u32>,
    /// Matching gate as a fraction of the frame diagonal.
    #[arg(long, global = true)]
    max_distance_frac: Option<f64>,
    /// Label smoothing window length.
    #[arg(long, global = true)]
    label_history: Option<usize>,
    /// Disable drawing on output frames.
    #[arg(long, global = true)]
    no_annotate: bool,
    /// Draw raw detector boxes instead of expanded ROI boxes.
    #[arg(long, global = true)]
    raw_boxes: bool,
    /// Overlap decode of the next frame with inference.
    #[arg(long, global = true)]
    pipelined: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and classify faces in a single image.
    Image {
        /// Input image (.ppm, or .png with the png feature).
        #[arg(long)]
        input: PathBuf,
        /// Write the annotated image here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the frame's JSONL record here.
        #[arg(long)]
        out_jsonl: Option<PathBuf>,
    },
    /// Run the tracked pipeline over a stream (Y4M file, image directory,
    /// or `-` for Y4M on stdin).
    Stream {
        #[arg(long)]
        input: String,
        /// Directory for annotated frames (frame_NNNNNN.ppm).
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// JSONL records, one line per frame.
        #[arg(long)]
        out_jsonl: Option<PathBuf>,
        /// Declared rate for image-directory inputs.
        #[arg(long)]
        fps: Option<f64>,
        /// Process each frame independently (no identity carry-over).
        #[arg(long)]
        no_tracking: bool,
    },
    /// Time pipeline stages across resolutions.
    Bench {
        /// Comma list: 480p,720p,1080p or WxH values.
        #[arg(long)]
        resolutions: Option<String>,
        #[arg(long)]
        iterations: Option<u32>,
        #[arg(long)]
        warmup: Option<u32>,
        /// Comma list of detect,roi,classify,end_to_end.
        #[arg(long)]
        stages: Option<String>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Extract face ROIs from a directory of raw images.
    PrepareDataset {
        #[arg(long)]
        raw_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn parse_resolution(token: &str) -> Result<FrameDims, String> {
    match token {
        "480p" => Ok(FrameDims::new(854, 480)),
        "720p" => Ok(FrameDims::new(1280, 720)),
        "1080p" => Ok(FrameDims::new(1920, 1080)),
        other => {
            let (w, h) = other
                .split_once('x')
                .ok_or_else(|| format!("bad resolution {other:?}; use 480p/720p/1080p or WxH"))?;
            let w: u32 = w.parse().map_err(|e| format!("{other:?}: {e}"))?;
            let h: u32 = h.parse().map_err(|e| format!("{other:?}: {e}"))?;
            if w == 0 || h == 0 {
                return Err(format!("{other:?}: dimensions must be >= 1"));
            }
            Ok(FrameDims::new(w, h))
        }
    }
}

fn parse_stage(token: &str) -> Result<BenchStage, String> {
    match token {
        "detect" => Ok(BenchStage::Detect),
        "roi" => Ok(BenchStage::Roi),
        "classify" => Ok(BenchStage::Classify),
        "end_to_end" => Ok(BenchStage::EndToEnd),
        other => Err(format!(
            "unknown stage {other:?}; use detect, roi, classify, end_to_end"
        )),
    }
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let config_path = cli
        .config
        .or_else(|| std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from));

    let f = &cli.overrides;
    let mut overrides = Overrides {
        detector_backend: f.detector.clone(),
        detector_model: f.detector_model.clone(),
        detector_threshold: f.detector_threshold,
        classifier_backend: f.classifier.clone(),
        classifier_model: f.classifier_model.clone(),
        classifier_threshold: f.classifier_threshold,
        expansion: f.expansion,
        max_disappeared: f.max_disappeared,
        max_distance_frac: f.max_distance_frac,
        label_history: f.label_history,
        annotate: f.no_annotate.then_some(false),
        draw_coasting_distinct: None,
        draw_raw_boxes: f.raw_boxes.then_some(true),
        tracking_enabled: None,
        pipelined_decode: f.pipelined.then_some(true),
    };
    overrides.tracking_enabled = match &cli.command {
        Command::Image { .. } => Some(false),
        Command::Stream { no_tracking, .. } => Some(!no_tracking),
        _ => None,
    };

    let cfg = load_config(config_path.as_deref(), &overrides)?;
    let detector = load_backend(&cfg.detector)?.into_detector()?;
    let classifier = load_backend(&cfg.classifier)?.into_classifier()?;
    let pipeline = Pipeline::new(cfg.pipeline.clone(), detector, classifier)?;

    match cli.command {
        Command::Image {
            input,
            out,
            out_jsonl,
        } => {
            let frame = read_image_file(&input)?;
            let result = pipeline.process_image(&frame)?;
            println!("{}: {} face(s)", input.display(), result.tracks.len());
            for t in &result.tracks {
                println!(
                    "  id={} {} conf={:.4} box=({:.1}, {:.1}, {:.1}, {:.1})",
                    t.id, t.label, t.confidence, t.bbox.x, t.bbox.y, t.bbox.w, t.bbox.h
                );
            }
            if result.skipped_rois > 0 {
                println!("  skipped {} zero-area crop(s)", result.skipped_rois);
            }
            if let Some(path) = out {
                let annotated = pipeline.annotate(&frame, &result.tracks);
                write_ppm_file(&path, &annotated)?;
                println!("wrote {}", path.display());
            }
            if let Some(path) = out_jsonl {
                let record = DetectionRecord::from_outputs(result.frame_index, &result.tracks);
                std::fs::write(&path, write_jsonl(&record))?;
                println!("wrote {}", path.display());
            }
        }
        Command::Stream {
            input,
            out_dir,
            out_jsonl,
            fps,
            no_tracking: _,
        } => {
            let mut source = open_source(&input)?;
            if let Some(fps) = fps {
                source.set_fps(fps);
            }
            if let Some(dir) = &out_dir {
                std::fs::create_dir_all(dir)?;
            }
            let mut jsonl_file = match &out_jsonl {
                Some(path) => Some(BufWriter::new(File::create(path)?)),
                None => None,
            };
            let mut sink = StreamSink {
                jsonl: jsonl_file.as_mut().map(|w| w as &mut dyn Write),
                frames_dir: out_dir,
            };
            let summary = pipeline.run_stream(&mut source, &mut sink)?;
            if let Some(w) = jsonl_file.as_mut() {
                w.flush()?;
            }
            println!("{summary}");
        }
        Command::Bench {
            resolutions,
            iterations,
            warmup,
            stages,
            json,
        } => {
            let mut bench_cfg = BenchConfig::default();
            if let Some(tokens) = resolutions {
                bench_cfg.resolutions = tokens
                    .split(',')
                    .map(parse_resolution)
                    .collect::<Result<_, _>>()?;
            }
            if let Some(n) = iterations {
                bench_cfg.iterations = n;
            }
            if let Some(n) = warmup {
                bench_cfg.warmup = n;
            }
            if let Some(tokens) = stages {
                bench_cfg.stages = tokens.split(',').map(parse_stage).collect::<Result<_, _>>()?;
            }
            let report = run_benchmark(&bench_cfg, &pipeline)?;
            print!("{}", report.to_text_table());
            if let Some(path) = json {
                std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
                println!("wrote {}", path.display());
            }
        }
        Command::PrepareDataset { raw_dir, out_dir } => {
            let counts = prepare_dataset(&raw_dir, &out_dir, &pipeline)?;
            println!(
                "images_in: {}  faces_out: {}  skipped: {}",
                counts.images_in, counts.faces_out, counts.skipped
            );
        }
    }
    Ok(())
}
