//! Built-in backends: ground-truth replay detectors, a pixel-scanning
//! detector, a marker-pattern classifier, and busy-wait wrappers for
//! latency calibration.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::backend::scene::{DropoutSchedule, SceneSpec, SCENE_BACKGROUND};
use crate::backend::{sort_detections, BackendError, Classification, Classifier, Detection, Detector};
use crate::frame::{Frame, MaskLabel};
use crate::geom::BoundingBox;
use crate::roi::{denormalize, PreprocessSpec, Tensor, TensorBatch};

/// Spins the calling thread for `duration` on the monotonic clock.
/// Unlike `thread::sleep`, this keeps the core busy and lands within
/// microseconds of the target, which is what latency calibration needs.
pub fn busy_wait(duration: Duration) {
    let start = Instant::now();
    while start.elapsed() < duration {
        std::hint::spin_loop();
    }
}

/// Detector that reads ground truth straight from a [`SceneSpec`] instead of
/// looking at pixels. Every detection scores 1.0.
pub struct OracleDetector {
    scene: SceneSpec,
}

impl OracleDetector {
    pub fn new(scene: SceneSpec) -> Self {
        OracleDetector { scene }
    }

    pub fn scene(&self) -> &SceneSpec {
        &self.scene
    }
}

impl Detector for OracleDetector {
    fn detect(&self, frame: &Frame, conf_threshold: f64) -> Result<Vec<Detection>, BackendError> {
        let mut dets: Vec<Detection> = self
            .scene
            .ground_truth(frame.index)
            .into_iter()
            .map(|(bbox, _)| Detection { bbox, score: 1.0 })
            .filter(|d| d.score >= conf_threshold)
            .collect();
        sort_detections(&mut dets);
        Ok(dets)
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

/// Oracle detector with scripted misses: any `(frame, face)` pair in its
/// schedule is suppressed, emulating a detector losing an object between
/// frames.
pub struct ScriptedDetector {
    scene: SceneSpec,
    schedule: DropoutSchedule,
}

impl ScriptedDetector {
    pub fn new(scene: SceneSpec, schedule: DropoutSchedule) -> Result<Self, BackendError> {
        schedule.validate(&scene)?;
        Ok(ScriptedDetector { scene, schedule })
    }
}

impl Detector for ScriptedDetector {
    fn detect(&self, frame: &Frame, conf_threshold: f64) -> Result<Vec<Detection>, BackendError> {
        let mut dets: Vec<Detection> = self
            .scene
            .ground_truth_with_ordinals(frame.index)
            .into_iter()
            .filter(|(ord, _, _)| !self.schedule.contains(frame.index, *ord))
            .map(|(_, bbox, _)| Detection { bbox, score: 1.0 })
            .filter(|d| d.score >= conf_threshold)
            .collect();
        sort_detections(&mut dets);
        Ok(dets)
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

/// Detector that segments non-background rectangles by scanning every pixel.
/// Works on rendered scene rasters that were round-tripped through files,
/// where no ground truth is attached. Cost grows linearly with pixel count.
pub struct ScanDetector {
    background: [u8; 3],
    /// Components narrower or shorter than this are discarded as noise.
    min_extent: u32,
}

impl Default for ScanDetector {
    fn default() -> Self {
        ScanDetector {
            background: SCENE_BACKGROUND,
            min_extent: 3,
        }
    }
}

impl ScanDetector {
    pub fn new(background: [u8; 3], min_extent: u32) -> Self {
        ScanDetector {
            background,
            min_extent,
        }
    }
}

#[derive(Clone, Copy)]
struct Bounds {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl Detector for ScanDetector {
    fn detect(&self, frame: &Frame, conf_threshold: f64) -> Result<Vec<Detection>, BackendError> {
        let w = frame.dims.width;
        // Connected components over "pixel != background", built from
        // horizontal runs merged across adjacent rows.
        let mut parent: Vec<usize> = Vec::new();
        let mut bounds: Vec<Bounds> = Vec::new();
        let mut prev_runs: Vec<(u32, u32, usize)> = Vec::new();

        for y in 0..frame.dims.height {
            let mut runs: Vec<(u32, u32, usize)> = Vec::new();
            let mut x = 0;
            while x < w {
                if frame.get(x, y) == self.background {
                    x += 1;
                    continue;
                }
                let start = x;
                while x < w && frame.get(x, y) != self.background {
                    x += 1;
                }
                let end = x - 1;

                let mut root = usize::MAX;
                for &(px0, px1, pid) in &prev_runs {
                    if px0 <= end && start <= px1 {
                        let r = find(&mut parent, pid);
                        if root == usize::MAX {
                            root = r;
                        } else if r != root {
                            parent[r] = root;
                            let rb = bounds[r];
                            let b = &mut bounds[root];
                            b.x0 = b.x0.min(rb.x0);
                            b.y0 = b.y0.min(rb.y0);
                            b.x1 = b.x1.max(rb.x1);
                            b.y1 = b.y1.max(rb.y1);
                        }
                    }
                }
                if root == usize::MAX {
                    root = parent.len();
                    parent.push(root);
                    bounds.push(Bounds {
                        x0: start,
                        y0: y,
                        x1: end,
                        y1: y,
                    });
                } else {
                    let b = &mut bounds[root];
                    b.x0 = b.x0.min(start);
                    b.x1 = b.x1.max(end);
                    b.y1 = b.y1.max(y);
                }
                runs.push((start, end, root));
            }
            prev_runs = runs;
        }

        let mut dets = Vec::new();
        for (i, &b) in bounds.iter().enumerate() {
            if find(&mut parent, i) != i {
                continue;
            }
            let bw = b.x1 - b.x0 + 1;
            let bh = b.y1 - b.y0 + 1;
            if bw < self.min_extent || bh < self.min_extent {
                continue;
            }
            dets.push(Detection {
                bbox: BoundingBox::new(b.x0 as f64, b.y0 as f64, bw as f64, bh as f64),
                score: 1.0,
            });
        }
        dets.retain(|d| d.score >= conf_threshold);
        sort_detections(&mut dets);
        Ok(dets)
    }

    fn name(&self) -> &str {
        "scan"
    }
}

/// Busy-waits a fixed duration before delegating, for latency calibration.
/// With no inner detector it reports no detections.
pub struct DelayDetector {
    delay: Duration,
    inner: Option<Arc<dyn Detector>>,
}

impl DelayDetector {
    pub fn new(delay: Duration, inner: Option<Arc<dyn Detector>>) -> Self {
        DelayDetector { delay, inner }
    }
}

impl Detector for DelayDetector {
    fn detect(&self, frame: &Frame, conf_threshold: f64) -> Result<Vec<Detection>, BackendError> {
        busy_wait(self.delay);
        match &self.inner {
            Some(d) => d.detect(frame, conf_threshold),
            None => Ok(Vec::new()),
        }
    }

    fn name(&self) -> &str {
        "delay"
    }
}

/// Classifier keyed to the synthetic marker pattern: an ROI containing both
/// near-black and near-white populations is a masked face. Decisions are
/// hard (probability 0 or 1), so results are deterministic.
pub struct SyntheticClassifier {
    preprocess: PreprocessSpec,
}

impl SyntheticClassifier {
    pub fn new(preprocess: PreprocessSpec) -> Self {
        SyntheticClassifier { preprocess }
    }

    fn p_mask(&self, element: &[f32]) -> f64 {
        let t = Tensor::new(self.preprocess.element_shape().to_vec(), element.to_vec());
        let rgb = denormalize(&t, &self.preprocess);
        let n = rgb.len() / 3;
        let mut dark = 0usize;
        let mut bright = 0usize;
        for px in rgb.chunks_exact(3) {
            let luma = (px[0] + px[1] + px[2]) / 3.0;
            if luma < 0.12 {
                dark += 1;
            } else if luma > 0.88 {
                bright += 1;
            }
        }
        let frac = 0.04 * n as f64;
        if dark as f64 >= frac && bright as f64 >= frac {
            1.0
        } else {
            0.0
        }
    }
}

impl Classifier for SyntheticClassifier {
    fn classify_batch(
        &self,
        batch: &TensorBatch,
        threshold: f64,
    ) -> Result<Vec<Classification>, BackendError> {
        let elem = self.preprocess.element_shape();
        let mut want = vec![batch.len()];
        want.extend_from_slice(&elem);
        if batch.tensor.shape != want {
            return Err(BackendError::ShapeMismatch {
                got: batch.tensor.shape.clone(),
                want,
            });
        }
        let elem_len: usize = elem.iter().product();
        Ok(batch
            .tensor
            .data
            .chunks_exact(elem_len)
            .map(|e| {
                let p = self.p_mask(e);
                if p >= threshold {
                    Classification {
                        label: MaskLabel::Mask,
                        confidence: p,
                    }
                } else {
                    Classification {
                        label: MaskLabel::NoMask,
                        confidence: 1.0 - p,
                    }
                }
            })
            .collect())
    }

    fn preprocess(&self) -> &PreprocessSpec {
        &self.preprocess
    }

    fn name(&self) -> &str {
        "synthetic"
    }
}

/// Busy-waits a fixed duration per batch before delegating.
pub struct DelayClassifier {
    delay: Duration,
    inner: Arc<dyn Classifier>,
}

impl DelayClassifier {
    pub fn new(delay: Duration, inner: Arc<dyn Classifier>) -> Self {
        DelayClassifier { delay, inner }
    }
}

impl Classifier for DelayClassifier {
    fn classify_batch(
        &self,
        batch: &TensorBatch,
        threshold: f64,
    ) -> Result<Vec<Classification>, BackendError> {
        busy_wait(self.delay);
        self.inner.classify_batch(batch, threshold)
    }

    fn preprocess(&self) -> &PreprocessSpec {
        self.inner.preprocess()
    }

    fn name(&self) -> &str {
        "delay"
    }
}
