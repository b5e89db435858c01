//! JSON configuration: documented defaults, overlaid by an optional config
//! file, overlaid by command-line flags, in that precedence.
//!
//! The schema is validated by hand over `serde_json::Value` so errors carry
//! a JSON-pointer path and unknown keys are rejected instead of silently
//! ignored.

use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::backend::{BackendKind, BackendSpec};
use crate::pipeline::PipelineConfig;
use crate::roi::{ChannelLayout, PreprocessSpec};

/// Config-path fallback consulted when no `--config` flag is given.
pub const CONFIG_ENV_VAR: &str = "MASKPIPE_CONFIG";

/// Fully merged and validated configuration.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub pipeline: PipelineConfig,
    pub detector: BackendSpec,
    pub classifier: BackendSpec,
}

impl Default for ResolvedConfig {
    fn default() -> Self {
        ResolvedConfig {
            pipeline: PipelineConfig::default(),
            detector: BackendSpec::detector("scan"),
            classifier: BackendSpec::classifier("synthetic", PreprocessSpec::default()),
        }
    }
}

/// Flag-level overrides; `None` leaves the file/default value in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub detector_backend: Option<String>,
    pub detector_model: Option<PathBuf>,
    pub detector_threshold: Option<f64>,
    pub classifier_backend: Option<String>,
    pub classifier_model: Option<PathBuf>,
    pub classifier_threshold: Option<f64>,
    pub expansion: Option<f64>,
    pub max_disappeared: Option<u32>,
    pub max_distance_frac: Option<f64>,
    pub label_history: Option<usize>,
    pub annotate: Option<bool>,
    pub draw_coasting_distinct: Option<bool>,
    pub draw_raw_boxes: Option<bool>,
    pub tracking_enabled: Option<bool>,
    pub pipelined_decode: Option<bool>,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("schema violation at {pointer}: {reason}")]
    SchemaViolation { pointer: String, reason: String },
    #[error("invalid value at {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
}

fn violation(ptr: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::SchemaViolation {
        pointer: ptr.to_string(),
        reason: reason.into(),
    }
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn as_object<'v>(
    v: &'v Value,
    ptr: &str,
    allowed: &[&str],
) -> Result<&'v serde_json::Map<String, Value>, ConfigError> {
    let obj = v
        .as_object()
        .ok_or_else(|| violation(ptr, "expected a JSON object"))?;
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(violation(
                &format!("{ptr}/{key}"),
                format!("unknown key; allowed: {allowed:?}"),
            ));
        }
    }
    Ok(obj)
}

fn as_f64(v: &Value, ptr: &str) -> Result<f64, ConfigError> {
    v.as_f64()
        .ok_or_else(|| violation(ptr, "expected a number"))
}

fn as_bool(v: &Value, ptr: &str) -> Result<bool, ConfigError> {
    v.as_bool()
        .ok_or_else(|| violation(ptr, "expected a boolean"))
}

fn as_str<'v>(v: &'v Value, ptr: &str) -> Result<&'v str, ConfigError> {
    v.as_str()
        .ok_or_else(|| violation(ptr, "expected a string"))
}

fn as_uint(v: &Value, ptr: &str) -> Result<u64, ConfigError> {
    v.as_u64()
        .ok_or_else(|| violation(ptr, "expected a nonnegative integer"))
}

fn as_f32_triple(v: &Value, ptr: &str) -> Result<[f32; 3], ConfigError> {
    let arr = v
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| violation(ptr, "expected an array of 3 numbers"))?;
    let mut out = [0.0f32; 3];
    for (i, item) in arr.iter().enumerate() {
        out[i] = as_f64(item, &format!("{ptr}/{i}"))? as f32;
    }
    Ok(out)
}

fn apply_backend_section(
    value: &Value,
    ptr: &str,
    spec: &mut BackendSpec,
    threshold: &mut f64,
    with_preprocess: bool,
) -> Result<(), ConfigError> {
    let allowed: &[&str] = if with_preprocess {
        &["backend", "threshold", "model_path", "preprocess", "mask_output_index"]
    } else {
        &["backend", "threshold", "model_path"]
    };
    let obj = as_object(value, ptr, allowed)?;
    if let Some(v) = obj.get("backend") {
        spec.name = as_str(v, &format!("{ptr}/backend"))?.to_string();
    }
    if let Some(v) = obj.get("threshold") {
        *threshold = as_f64(v, &format!("{ptr}/threshold"))?;
    }
    if let Some(v) = obj.get("model_path") {
        spec.model_path = Some(PathBuf::from(as_str(v, &format!("{ptr}/model_path"))?));
    }
    if let Some(v) = obj.get("mask_output_index") {
        spec.mask_output_index = as_uint(v, &format!("{ptr}/mask_output_index"))? as usize;
    }
    if let Some(v) = obj.get("preprocess") {
        let pptr = format!("{ptr}/preprocess");
        let pobj = as_object(v, &pptr, &["target", "mean", "scale", "layout"])?;
        let preprocess = spec.preprocess.get_or_insert_with(PreprocessSpec::default);
        if let Some(t) = pobj.get("target") {
            let tptr = format!("{pptr}/target");
            let arr = t
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| violation(&tptr, "expected [width, height]"))?;
            let w = as_uint(&arr[0], &format!("{tptr}/0"))?;
            let h = as_uint(&arr[1], &format!("{tptr}/1"))?;
            if w < 1 || h < 1 {
                return Err(invalid(&tptr, "target dims must be >= 1"));
            }
            preprocess.target_width = w as u32;
            preprocess.target_height = h as u32;
        }
        if let Some(m) = pobj.get("mean") {
            preprocess.mean = as_f32_triple(m, &format!("{pptr}/mean"))?;
        }
        if let Some(s) = pobj.get("scale") {
            let scale = as_f32_triple(s, &format!("{pptr}/scale"))?;
            if scale.contains(&0.0) {
                return Err(invalid(&format!("{pptr}/scale"), "components must be nonzero"));
            }
            preprocess.scale = scale;
        }
        if let Some(l) = pobj.get("layout") {
            let lptr = format!("{pptr}/layout");
            preprocess.layout = match as_str(l, &lptr)? {
                "interleaved" => ChannelLayout::Interleaved,
                "planar" => ChannelLayout::Planar,
                other => {
                    return Err(invalid(&lptr, format!("unknown layout {other:?}")));
                }
            };
        }
    }
    Ok(())
}

/// Applies one parsed config file on top of `cfg`. All keys are optional;
/// unknown keys are rejected.
pub fn apply_config_value(cfg: &mut ResolvedConfig, root: &Value) -> Result<(), ConfigError> {
    let obj = as_object(
        root,
        "",
        &["detector", "classifier", "roi", "tracker", "output"],
    )?;
    if let Some(v) = obj.get("detector") {
        apply_backend_section(
            v,
            "/detector",
            &mut cfg.detector,
            &mut cfg.pipeline.detector_threshold,
            false,
        )?;
    }
    if let Some(v) = obj.get("classifier") {
        apply_backend_section(
            v,
            "/classifier",
            &mut cfg.classifier,
            &mut cfg.pipeline.classifier_threshold,
            true,
        )?;
    }
    if let Some(v) = obj.get("roi") {
        let robj = as_object(v, "/roi", &["expansion"])?;
        if let Some(e) = robj.get("expansion") {
            cfg.pipeline.expansion_ratio = as_f64(e, "/roi/expansion")?;
        }
    }
    if let Some(v) = obj.get("tracker") {
        let tobj = as_object(
            v,
            "/tracker",
            &["max_disappeared", "max_distance_frac", "label_history"],
        )?;
        if let Some(d) = tobj.get("max_disappeared") {
            cfg.pipeline.tracker.max_disappeared =
                as_uint(d, "/tracker/max_disappeared")? as u32;
        }
        if let Some(d) = tobj.get("max_distance_frac") {
            cfg.pipeline.tracker.max_match_distance_frac =
                as_f64(d, "/tracker/max_distance_frac")?;
        }
        if let Some(d) = tobj.get("label_history") {
            let n = as_uint(d, "/tracker/label_history")?;
            cfg.pipeline.tracker.label_history_len = n as usize;
        }
    }
    if let Some(v) = obj.get("output") {
        let oobj = as_object(v, "/output", &["annotate", "draw_coasting_distinct"])?;
        if let Some(a) = oobj.get("annotate") {
            cfg.pipeline.annotate = as_bool(a, "/output/annotate")?;
        }
        if let Some(d) = oobj.get("draw_coasting_distinct") {
            cfg.pipeline.draw_coasting_distinct = as_bool(d, "/output/draw_coasting_distinct")?;
        }
    }
    Ok(())
}

pub fn apply_overrides(cfg: &mut ResolvedConfig, ov: &Overrides) {
    if let Some(v) = &ov.detector_backend {
        cfg.detector.name = v.clone();
    }
    if let Some(v) = &ov.detector_model {
        cfg.detector.model_path = Some(v.clone());
    }
    if let Some(v) = ov.detector_threshold {
        cfg.pipeline.detector_threshold = v;
    }
    if let Some(v) = &ov.classifier_backend {
        cfg.classifier.name = v.clone();
    }
    if let Some(v) = &ov.classifier_model {
        cfg.classifier.model_path = Some(v.clone());
    }
    if let Some(v) = ov.classifier_threshold {
        cfg.pipeline.classifier_threshold = v;
    }
    if let Some(v) = ov.expansion {
        cfg.pipeline.expansion_ratio = v;
    }
    if let Some(v) = ov.max_disappeared {
        cfg.pipeline.tracker.max_disappeared = v;
    }
    if let Some(v) = ov.max_distance_frac {
        cfg.pipeline.tracker.max_match_distance_frac = v;
    }
    if let Some(v) = ov.label_history {
        cfg.pipeline.tracker.label_history_len = v;
    }
    if let Some(v) = ov.annotate {
        cfg.pipeline.annotate = v;
    }
    if let Some(v) = ov.draw_coasting_distinct {
        cfg.pipeline.draw_coasting_distinct = v;
    }
    if let Some(v) = ov.draw_raw_boxes {
        cfg.pipeline.draw_raw_boxes = v;
    }
    if let Some(v) = ov.tracking_enabled {
        cfg.pipeline.tracking_enabled = v;
    }
    if let Some(v) = ov.pipelined_decode {
        cfg.pipeline.pipelined_decode = v;
    }
}

/// Range checks over the merged result, with the offending key in the
/// error.
pub fn validate(cfg: &ResolvedConfig) -> Result<(), ConfigError> {
    let in_unit = |v: f64| (0.0..=1.0).contains(&v);
    if !in_unit(cfg.pipeline.detector_threshold) {
        return Err(invalid("/detector/threshold", "must be in [0, 1]"));
    }
    if !in_unit(cfg.pipeline.classifier_threshold) {
        return Err(invalid("/classifier/threshold", "must be in [0, 1]"));
    }
    if !cfg.pipeline.expansion_ratio.is_finite() || cfg.pipeline.expansion_ratio < 0.0 {
        return Err(invalid("/roi/expansion", "must be >= 0"));
    }
    if !cfg.pipeline.tracker.max_match_distance_frac.is_finite()
        || cfg.pipeline.tracker.max_match_distance_frac < 0.0
    {
        return Err(invalid("/tracker/max_distance_frac", "must be >= 0"));
    }
    if cfg.pipeline.tracker.label_history_len < 1 {
        return Err(invalid("/tracker/label_history", "must be >= 1"));
    }
    if cfg.detector.kind != BackendKind::Detector {
        return Err(invalid("/detector/backend", "spec kind must be detector"));
    }
    if cfg.classifier.kind != BackendKind::Classifier {
        return Err(invalid("/classifier/backend", "spec kind must be classifier"));
    }
    if let Some(p) = &cfg.classifier.preprocess {
        if let Err(e) = p.validate() {
            return Err(invalid("/classifier/preprocess", e.to_string()));
        }
    }
    Ok(())
}

/// Loads configuration with full precedence: defaults, then the file (when
/// given), then flag overrides; the merged result is validated as a whole.
pub fn load_config(
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ResolvedConfig, ConfigError> {
    let mut cfg = ResolvedConfig::default();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root: Value = serde_json::from_str(&text)?;
        apply_config_value(&mut cfg, &root)?;
    }
    apply_overrides(&mut cfg, overrides);
    validate(&cfg)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_json(json: &str) -> Result<ResolvedConfig, ConfigError> {
        let mut cfg = ResolvedConfig::default();
        let root: Value = serde_json::from_str(json).unwrap();
        apply_config_value(&mut cfg, &root)?;
        validate(&cfg)?;
        Ok(cfg)
    }

    #[test]
    fn empty_object_yields_documented_defaults() {
        let cfg = from_json("{}").unwrap();
        assert_eq!(cfg.pipeline.expansion_ratio, 0.20);
        assert_eq!(cfg.pipeline.detector_threshold, 0.5);
        assert_eq!(cfg.pipeline.classifier_threshold, 0.5);
        assert_eq!(cfg.pipeline.tracker.max_disappeared, 5);
        assert_eq!(cfg.pipeline.tracker.max_match_distance_frac, 0.10);
        assert_eq!(cfg.pipeline.tracker.label_history_len, 5);
        let p = cfg.classifier.preprocess.as_ref().unwrap();
        assert_eq!((p.target_width, p.target_height), (224, 224));
        assert_eq!(cfg.detector.name, "scan");
        assert_eq!(cfg.classifier.name, "synthetic");
        assert!(cfg.pipeline.annotate);
        assert!(cfg.pipeline.draw_coasting_distinct);
    }

    #[test]
    fn negative_expansion_is_invalid_value_at_key() {
        let err = from_json(r#"{"roi":{"expansion":-1}}"#).unwrap_err();
        match err {
            ConfigError::InvalidValue { key, .. } => assert_eq!(key, "/roi/expansion"),
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_schema_violation_with_pointer() {
        let err = from_json(r#"{"roj":{"expansion":0.3}}"#).unwrap_err();
        match err {
            ConfigError::SchemaViolation { pointer, .. } => assert_eq!(pointer, "/roj"),
            other => panic!("wrong error {other:?}"),
        }
        let err = from_json(r#"{"tracker":{"max_gone":1}}"#).unwrap_err();
        match err {
            ConfigError::SchemaViolation { pointer, .. } => {
                assert_eq!(pointer, "/tracker/max_gone")
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn wrong_type_reports_pointer() {
        let err = from_json(r#"{"detector":{"threshold":"high"}}"#).unwrap_err();
        match err {
            ConfigError::SchemaViolation { pointer, .. } => {
                assert_eq!(pointer, "/detector/threshold")
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn negative_max_disappeared_rejected() {
        let err = from_json(r#"{"tracker":{"max_disappeared":-1}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::SchemaViolation { .. }));
    }

    #[test]
    fn threshold_above_one_rejected() {
        let err = from_json(r#"{"detector":{"threshold":1.0000001}}"#).unwrap_err();
        match err {
            ConfigError::InvalidValue { key, .. } => assert_eq!(key, "/detector/threshold"),
            other => panic!("wrong error {other:?}"),
        }
        assert!(from_json(r#"{"detector":{"threshold":1.0}}"#).is_ok());
    }

    #[test]
    fn file_values_and_flag_precedence() {
        let mut cfg = ResolvedConfig::default();
        let root: Value = serde_json::from_str(
            r#"{
                "roi": {"expansion": 0.2},
                "classifier": {"preprocess": {"target": [160, 160], "layout": "planar"}},
                "tracker": {"max_disappeared": 8}
            }"#,
        )
        .unwrap();
        apply_config_value(&mut cfg, &root).unwrap();
        assert_eq!(cfg.pipeline.expansion_ratio, 0.2);
        assert_eq!(cfg.pipeline.tracker.max_disappeared, 8);
        let p = cfg.classifier.preprocess.as_ref().unwrap();
        assert_eq!(p.layout, ChannelLayout::Planar);
        assert_eq!(p.target_width, 160);

        // Flags win over the file.
        let ov = Overrides {
            expansion: Some(0.4),
            ..Default::default()
        };
        apply_overrides(&mut cfg, &ov);
        validate(&cfg).unwrap();
        assert_eq!(cfg.pipeline.expansion_ratio, 0.4);
    }

    #[test]
    fn merge_is_deterministic() {
        let json = r#"{"roi":{"expansion":0.35},"output":{"annotate":false}}"#;
        let a = from_json(json).unwrap();
        let b = from_json(json).unwrap();
        assert_eq!(a.pipeline.expansion_ratio, b.pipeline.expansion_ratio);
        assert_eq!(a.pipeline.annotate, b.pipeline.annotate);
        assert!(!a.pipeline.annotate);
    }

    #[test]
    fn zero_scale_rejected() {
        let err =
            from_json(r#"{"classifier":{"preprocess":{"scale":[0.0,1.0,1.0]}}}"#).unwrap_err();
        assert!(matches!(err, ConfigError::InvalidValue { .. }));
    }
}
