//! Dataset ROI extraction: run stage 1 plus the ROI block over a directory
//! of raw images and write each face crop out as an image.
//!
//! Crops are written pre-normalization (they are images, not tensors);
//! normalization is a training-time transform applied by whoever consumes
//! the dataset.

use std::path::Path;

use crate::media::ppm::write_ppm_file;
use crate::media::source::{list_image_files, read_image_file};
use crate::media::MediaError;
use crate::pipeline::{Pipeline, PipelineError};
use crate::roi::{crop, expand_box, resize_bilinear};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DatasetCounts {
    /// Images successfully decoded (including those with zero faces).
    pub images_in: u64,
    /// Face crops written.
    pub faces_out: u64,
    /// Files that could not be decoded; the run continues past them.
    pub skipped: u64,
}

/// Extracts every detected face from `raw_dir` into
/// `out_dir/<stem>_face<k>.ppm`, resized to the classifier's target size.
/// Output naming is input-derived, so results are order-independent.
pub fn prepare_dataset(
    raw_dir: &Path,
    out_dir: &Path,
    pipeline: &Pipeline,
) -> Result<DatasetCounts, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::Media(MediaError::Io(e)))?;
    let files = list_image_files(raw_dir).map_err(PipelineError::Media)?;
    let spec = pipeline.classifier().preprocess();
    let mut counts = DatasetCounts::default();

    for path in files {
        let frame = match read_image_file(&path) {
            Ok(f) => f,
            Err(_) => {
                counts.skipped += 1;
                continue;
            }
        };
        counts.images_in += 1;
        let dets = pipeline
            .detector()
            .detect(&frame, pipeline.config().detector_threshold)
            .map_err(|source| PipelineError::Backend {
                stage: crate::pipeline::Stage::Detect,
                source,
            })?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".to_string());
        let mut k = 0usize;
        for det in &dets {
            let roi = expand_box(&det.bbox, pipeline.config().expansion_ratio, frame.dims);
            let patch = crop(&frame, &roi);
            if patch.is_empty() {
                continue;
            }
            let resized = resize_bilinear(&patch, spec.target_width, spec.target_height);
            let out = crate::frame::Frame::new(
                crate::geom::FrameDims::new(resized.width, resized.height),
                resized.data,
                0,
            );
            let name = format!("{stem}_face{k}.ppm");
            write_ppm_file(&out_dir.join(name), &out).map_err(PipelineError::Media)?;
            counts.faces_out += 1;
            k += 1;
        }
    }
    Ok(counts)
}
