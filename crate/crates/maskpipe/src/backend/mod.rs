//! Stage-1 (face detector) and stage-2 (mask classifier) backend contracts,
//! plus the deterministic built-in backends used for testing, benchmarking
//! and synthetic-scene replay.
//!
//! Real exported models plug in behind the same two traits. The built-in
//! `onnx` adapter validates a model file's tensor signature against the
//! declared spec; actual inference is left to an implementation of
//! [`Detector`]/[`Classifier`] over the runtime of your choice.

mod builtin;
pub mod onnx_sig;
mod scene;

pub use builtin::{
    busy_wait, DelayClassifier, DelayDetector, OracleDetector, ScanDetector, ScriptedDetector,
    SyntheticClassifier,
};
pub use scene::{render_scene, DropoutSchedule, SceneFace, SceneSpec};

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{Frame, MaskLabel};
use crate::geom::BoundingBox;
use crate::roi::{PreprocessSpec, TensorBatch};

/// One detected face: box in frame coordinates plus detector confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub score: f64,
}

/// One classified ROI. `confidence` is the probability of the returned
/// label, so it is always >= the decision threshold's complement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub label: MaskLabel,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Detector,
    Classifier,
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendKind::Detector => f.write_str("detector"),
            BackendKind::Classifier => f.write_str("classifier"),
        }
    }
}

/// Declarative description of a backend, loadable from JSON config.
///
/// `model_path` points at an ONNX file for the `onnx` backend, or at a
/// scene JSON file for the `oracle`/`scripted` replay backends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BackendSpec {
    pub name: String,
    pub kind: BackendKind,
    /// Required for classifiers; ignored for detectors.
    pub preprocess: Option<PreprocessSpec>,
    pub model_path: Option<PathBuf>,
    /// Which output index of an external classifier carries p(Mask).
    /// Class ordering is not standardized across exports, so it must be
    /// declared rather than guessed.
    #[serde(default)]
    pub mask_output_index: usize,
}

impl BackendSpec {
    pub fn detector(name: &str) -> Self {
        BackendSpec {
            name: name.to_string(),
            kind: BackendKind::Detector,
            preprocess: None,
            model_path: None,
            mask_output_index: 0,
        }
    }

    pub fn classifier(name: &str, preprocess: PreprocessSpec) -> Self {
        BackendSpec {
            name: name.to_string(),
            kind: BackendKind::Classifier,
            preprocess: Some(preprocess),
            model_path: None,
            mask_output_index: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("model file not found: {path}")]
    ModelNotFound { path: PathBuf },
    #[error("model signature mismatch: {reason}")]
    SignatureMismatch { reason: String },
    #[error("no {kind} backend named {name:?}")]
    UnsupportedKind { name: String, kind: BackendKind },
    #[error("batch shape {got:?} does not match preprocess spec shape {want:?}")]
    ShapeMismatch { got: Vec<usize>, want: Vec<usize> },
    #[error("backend {backend:?} failed: {reason}")]
    BackendFailure { backend: String, reason: String },
    #[error("invalid scene: {reason}")]
    InvalidScene { reason: String },
    #[error("invalid backend spec: {reason}")]
    InvalidSpec { reason: String },
}

/// Stage-1 contract. Implementations must tolerate concurrent calls from
/// multiple streams; each call is synchronous.
pub trait Detector: Send + Sync {
    /// Returns every face with `score >= conf_threshold`, sorted by
    /// descending score, ties broken by ascending x then y. Boxes are raw
    /// detector output; clamping is the ROI block's job.
    fn detect(&self, frame: &Frame, conf_threshold: f64) -> Result<Vec<Detection>, BackendError>;

    fn name(&self) -> &str;

    /// Weight count when the backing model file declares one.
    fn parameter_count(&self) -> Option<u64> {
        None
    }
}

/// Stage-2 contract. The batch must have been produced against this
/// backend's own [`PreprocessSpec`].
pub trait Classifier: Send + Sync {
    /// One classification per batch element, in batch order.
    /// `label == Mask` iff `p(Mask) >= threshold`.
    fn classify_batch(
        &self,
        batch: &TensorBatch,
        threshold: f64,
    ) -> Result<Vec<Classification>, BackendError>;

    fn preprocess(&self) -> &PreprocessSpec;

    fn name(&self) -> &str;

    /// Weight count when the backing model file declares one.
    fn parameter_count(&self) -> Option<u64> {
        None
    }
}

/// A loaded backend of either kind.
pub enum BackendHandle {
    Detector(Arc<dyn Detector>),
    Classifier(Arc<dyn Classifier>),
}

impl std::fmt::Debug for BackendHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BackendHandle::Detector(d) => write!(f, "Detector({:?})", d.name()),
            BackendHandle::Classifier(c) => write!(f, "Classifier({:?})", c.name()),
        }
    }
}

impl BackendHandle {
    pub fn into_detector(self) -> Result<Arc<dyn Detector>, BackendError> {
        match self {
            BackendHandle::Detector(d) => Ok(d),
            BackendHandle::Classifier(c) => Err(BackendError::UnsupportedKind {
                name: c.name().to_string(),
                kind: BackendKind::Detector,
            }),
        }
    }

    pub fn into_classifier(self) -> Result<Arc<dyn Classifier>, BackendError> {
        match self {
            BackendHandle::Classifier(c) => Ok(c),
            BackendHandle::Detector(d) => Err(BackendError::UnsupportedKind {
                name: d.name().to_string(),
                kind: BackendKind::Classifier,
            }),
        }
    }
}

/// Orders detections by descending score, ties by ascending x then y.
pub(crate) fn sort_detections(dets: &mut [Detection]) {
    dets.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.bbox.x.total_cmp(&b.bbox.x))
            .then(a.bbox.y.total_cmp(&b.bbox.y))
    });
}

/// Scene JSON accepted by the replay backends: a [`SceneSpec`] plus an
/// optional dropout schedule for the `scripted` detector.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneFile {
    pub dims: crate::geom::FrameDims,
    pub faces: Vec<SceneFace>,
    #[serde(default)]
    pub dropouts: Vec<(u64, usize)>,
}

impl SceneFile {
    pub fn scene(&self) -> SceneSpec {
        SceneSpec {
            dims: self.dims,
            faces: self.faces.clone(),
        }
    }
}

fn load_scene_file(path: &PathBuf) -> Result<SceneFile, BackendError> {
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            BackendError::ModelNotFound { path: path.clone() }
        } else {
            BackendError::BackendFailure {
                backend: "scene".into(),
                reason: e.to_string(),
            }
        }
    })?;
    serde_json::from_slice(&bytes).map_err(|e| BackendError::InvalidScene {
        reason: format!("{path:?}: {e}"),
    })
}

/// Instantiates a backend from its spec.
///
/// Built-in names: `oracle`, `scripted`, `scan` (detectors), `synthetic`
/// (classifier), and `onnx` (either kind, requires `model_path`). The
/// replay detectors read their scene from `model_path` when given one and
/// fall back to an empty scene otherwise.
pub fn load_backend(spec: &BackendSpec) -> Result<BackendHandle, BackendError> {
    match (spec.kind, spec.name.as_str()) {
        (BackendKind::Detector, "oracle") => {
            let scene = match &spec.model_path {
                Some(p) => load_scene_file(p)?.scene(),
                None => SceneSpec::empty(),
            };
            Ok(BackendHandle::Detector(Arc::new(OracleDetector::new(
                scene,
            ))))
        }
        (BackendKind::Detector, "scripted") => {
            let (scene, dropouts) = match &spec.model_path {
                Some(p) => {
                    let f = load_scene_file(p)?;
                    let schedule = DropoutSchedule::new(f.dropouts.clone());
                    (f.scene(), schedule)
                }
                None => (SceneSpec::empty(), DropoutSchedule::default()),
            };
            Ok(BackendHandle::Detector(Arc::new(ScriptedDetector::new(
                scene, dropouts,
            )?)))
        }
        (BackendKind::Detector, "scan") => {
            Ok(BackendHandle::Detector(Arc::new(ScanDetector::default())))
        }
        (BackendKind::Classifier, "synthetic") => {
            let preprocess = spec.preprocess.clone().ok_or(BackendError::InvalidSpec {
                reason: "classifier spec requires a preprocess block".into(),
            })?;
            Ok(BackendHandle::Classifier(Arc::new(
                SyntheticClassifier::new(preprocess),
            )))
        }
        (kind, "onnx") => load_onnx(spec, kind),
        (kind, name) => Err(BackendError::UnsupportedKind {
            name: name.to_string(),
            kind,
        }),
    }
}

fn load_onnx(spec: &BackendSpec, kind: BackendKind) -> Result<BackendHandle, BackendError> {
    let path = spec.model_path.as_ref().ok_or(BackendError::ModelNotFound {
        path: PathBuf::from("<unset model_path>"),
    })?;
    let bytes = std::fs::read(path).map_err(|_| BackendError::ModelNotFound { path: path.clone() })?;
    let sig = onnx_sig::read_model_sig(&bytes).map_err(|e| BackendError::SignatureMismatch {
        reason: format!("{path:?}: {e}"),
    })?;
    let parameters = onnx_sig::parameter_count(&bytes).ok().filter(|&n| n > 0);
    match kind {
        BackendKind::Detector => {
            onnx_sig::check_detector(&sig)
                .map_err(|reason| BackendError::SignatureMismatch { reason })?;
            Ok(BackendHandle::Detector(Arc::new(UnboundOnnxModel {
                name: spec.name.clone(),
                preprocess: PreprocessSpec::default(),
                parameters,
            })))
        }
        BackendKind::Classifier => {
            let preprocess = spec.preprocess.clone().ok_or(BackendError::InvalidSpec {
                reason: "classifier spec requires a preprocess block".into(),
            })?;
            onnx_sig::check_classifier(&sig, &preprocess, spec.mask_output_index)
                .map_err(|reason| BackendError::SignatureMismatch { reason })?;
            Ok(BackendHandle::Classifier(Arc::new(UnboundOnnxModel {
                name: spec.name.clone(),
                preprocess,
                parameters,
            })))
        }
    }
}

/// Handle for a signature-validated model file with no inference runtime
/// bound to it. Loading succeeds (the file and its tensor signature check
/// out); invoking it reports the missing runtime.
struct UnboundOnnxModel {
    name: String,
    preprocess: PreprocessSpec,
    parameters: Option<u64>,
}

impl UnboundOnnxModel {
    fn fail<T>(&self) -> Result<T, BackendError> {
        Err(BackendError::BackendFailure {
            backend: self.name.clone(),
            reason: "no ONNX inference runtime is linked; implement the Detector/Classifier \
                     trait over your runtime to serve this model"
                .into(),
        })
    }
}

impl Detector for UnboundOnnxModel {
    fn detect(&self, _frame: &Frame, _t: f64) -> Result<Vec<Detection>, BackendError> {
        self.fail()
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn parameter_count(&self) -> Option<u64> {
        self.parameters
    }
}

impl Classifier for UnboundOnnxModel {
    fn classify_batch(
        &self,
        _batch: &TensorBatch,
        _t: f64,
    ) -> Result<Vec<Classification>, BackendError> {
        self.fail()
    }

    fn preprocess(&self) -> &PreprocessSpec {
        &self.preprocess
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn parameter_count(&self) -> Option<u64> {
        self.parameters
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_oracle_without_file() {
        let handle = load_backend(&BackendSpec::detector("oracle")).unwrap();
        assert!(matches!(handle, BackendHandle::Detector(_)));
    }

    #[test]
    fn unknown_backend_is_unsupported() {
        let err = load_backend(&BackendSpec::detector("retina")).unwrap_err();
        assert!(matches!(err, BackendError::UnsupportedKind { .. }));
    }

    #[test]
    fn classifier_without_preprocess_rejected() {
        let mut spec = BackendSpec::detector("synthetic");
        spec.kind = BackendKind::Classifier;
        let err = load_backend(&spec).unwrap_err();
        assert!(matches!(err, BackendError::InvalidSpec { .. }));
    }

    #[test]
    fn onnx_requires_model_path() {
        let spec = BackendSpec::detector("onnx");
        let err = load_backend(&spec).unwrap_err();
        assert!(matches!(err, BackendError::ModelNotFound { .. }));
    }

    #[test]
    fn onnx_classifier_loads_when_signature_matches() {
        use crate::roi::{ChannelLayout, PreprocessSpec};
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("mask.onnx");
        std::fs::write(&path, onnx_sig::fixtures::classifier_model(224, 224, 2)).unwrap();

        let preprocess = PreprocessSpec {
            layout: ChannelLayout::Planar,
            ..Default::default()
        };
        let mut spec = BackendSpec::classifier("onnx", preprocess.clone());
        spec.model_path = Some(path.clone());
        let clf = load_backend(&spec).unwrap().into_classifier().unwrap();
        assert_eq!(clf.parameter_count(), Some(2 * 1280));

        // The handle is signature-checked but has no runtime bound to it.
        let frame = Frame::filled(crate::geom::FrameDims::new(8, 8), [0, 0, 0], 0);
        let batch = crate::roi::process_detections(&frame, &[], &preprocess, 0.2).unwrap();
        assert!(matches!(
            clf.classify_batch(&batch, 0.5),
            Err(BackendError::BackendFailure { .. })
        ));

        // A 160x160 spec against the 224x224 model is a mismatch.
        let mut bad = BackendSpec::classifier(
            "onnx",
            PreprocessSpec {
                target_width: 160,
                target_height: 160,
                layout: ChannelLayout::Planar,
                ..Default::default()
            },
        );
        bad.model_path = Some(path);
        assert!(matches!(
            load_backend(&bad).unwrap_err(),
            BackendError::SignatureMismatch { .. }
        ));
    }

    #[test]
    fn scene_file_round_trips_through_load() {
        use crate::frame::MaskLabel;
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("scene.json");
        let file = SceneFile {
            dims: crate::geom::FrameDims::new(160, 120),
            faces: vec![SceneFace::new(
                BoundingBox::new(30.0, 30.0, 40.0, 40.0),
                MaskLabel::Mask,
            )],
            dropouts: vec![(3, 0)],
        };
        std::fs::write(&path, serde_json::to_vec(&file).unwrap()).unwrap();

        let mut spec = BackendSpec::detector("scripted");
        spec.model_path = Some(path);
        let det = load_backend(&spec).unwrap().into_detector().unwrap();
        let (frame2, _) = render_scene(&file.scene(), 2).unwrap();
        assert_eq!(det.detect(&frame2, 0.5).unwrap().len(), 1);
        let (frame3, _) = render_scene(&file.scene(), 3).unwrap();
        assert!(det.detect(&frame3, 0.5).unwrap().is_empty());
    }

    #[test]
    fn sort_orders_by_score_then_position() {
        let d = |x: f64, y: f64, s: f64| Detection {
            bbox: BoundingBox::new(x, y, 10.0, 10.0),
            score: s,
        };
        let mut v = vec![d(5.0, 0.0, 0.9), d(1.0, 2.0, 0.9), d(0.0, 0.0, 1.0), d(1.0, 1.0, 0.9)];
        sort_detections(&mut v);
        let key: Vec<(f64, f64, f64)> = v.iter().map(|d| (d.score, d.bbox.x, d.bbox.y)).collect();
        assert_eq!(
            key,
            vec![
                (1.0, 0.0, 0.0),
                (0.9, 1.0, 1.0),
                (0.9, 1.0, 2.0),
                (0.9, 5.0, 0.0)
            ]
        );
    }
}
