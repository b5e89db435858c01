//! Tensor-signature reader for ONNX model files.
//!
//! Model files are opaque to this crate beyond their input/output tensor
//! signatures, so instead of pulling in a protobuf stack this walks the wire
//! format directly for the handful of fields involved: graph inputs, graph
//! outputs, and initializer names (weights listed as inputs by older
//! exporters must not count as real inputs). Everything else is skipped by
//! length.

use std::fmt;

use crate::roi::{ChannelLayout, PreprocessSpec};

/// One declared tensor: name plus per-axis extents. `None` marks a dynamic
/// axis (symbolic `dim_param`, or a nonpositive `dim_value`).
#[derive(Debug, Clone, PartialEq)]
pub struct TensorSig {
    pub name: String,
    pub dims: Vec<Option<i64>>,
}

/// Inputs and outputs declared by a model's graph.
#[derive(Debug, Clone, Default)]
pub struct ModelSig {
    pub inputs: Vec<TensorSig>,
    pub outputs: Vec<TensorSig>,
}

#[derive(Debug, PartialEq)]
pub enum SigError {
    Truncated,
    BadWireType(u8),
    NoGraph,
}

impl fmt::Display for SigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigError::Truncated => f.write_str("file truncated mid-record"),
            SigError::BadWireType(w) => write!(f, "unsupported wire type {w}"),
            SigError::NoGraph => f.write_str("model contains no graph"),
        }
    }
}

impl std::error::Error for SigError {}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn done(&self) -> bool {
        self.pos >= self.buf.len()
    }

    fn varint(&mut self) -> Result<u64, SigError> {
        let mut v: u64 = 0;
        let mut shift = 0;
        loop {
            let b = *self.buf.get(self.pos).ok_or(SigError::Truncated)?;
            self.pos += 1;
            if shift < 64 {
                v |= u64::from(b & 0x7f) << shift;
            }
            if b & 0x80 == 0 {
                return Ok(v);
            }
            shift += 7;
        }
    }

    /// Returns (field number, wire type).
    fn tag(&mut self) -> Result<(u64, u8), SigError> {
        let t = self.varint()?;
        Ok((t >> 3, (t & 7) as u8))
    }

    fn bytes(&mut self) -> Result<&'a [u8], SigError> {
        let len = self.varint()? as usize;
        let end = self.pos.checked_add(len).ok_or(SigError::Truncated)?;
        if end > self.buf.len() {
            return Err(SigError::Truncated);
        }
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn skip(&mut self, wire: u8) -> Result<(), SigError> {
        match wire {
            0 => {
                self.varint()?;
            }
            1 => {
                self.pos += 8;
                if self.pos > self.buf.len() {
                    return Err(SigError::Truncated);
                }
            }
            2 => {
                self.bytes()?;
            }
            5 => {
                self.pos += 4;
                if self.pos > self.buf.len() {
                    return Err(SigError::Truncated);
                }
            }
            w => return Err(SigError::BadWireType(w)),
        }
        Ok(())
    }
}

/// Extracts the graph signature from serialized ONNX model bytes.
pub fn read_model_sig(bytes: &[u8]) -> Result<ModelSig, SigError> {
    let mut r = Reader::new(bytes);
    let mut graph: Option<&[u8]> = None;
    while !r.done() {
        let (field, wire) = r.tag()?;
        if field == 7 && wire == 2 {
            graph = Some(r.bytes()?);
        } else {
            r.skip(wire)?;
        }
    }
    let graph = graph.ok_or(SigError::NoGraph)?;

    let mut sig = ModelSig::default();
    let mut initializer_names: Vec<String> = Vec::new();
    let mut raw_inputs: Vec<TensorSig> = Vec::new();

    let mut r = Reader::new(graph);
    while !r.done() {
        let (field, wire) = r.tag()?;
        match (field, wire) {
            (11, 2) => raw_inputs.push(parse_value_info(r.bytes()?)?),
            (12, 2) => sig.outputs.push(parse_value_info(r.bytes()?)?),
            (5, 2) => {
                if let Some(name) = parse_tensor_name(r.bytes()?)? {
                    initializer_names.push(name);
                }
            }
            _ => r.skip(wire)?,
        }
    }
    sig.inputs = raw_inputs
        .into_iter()
        .filter(|i| !initializer_names.contains(&i.name))
        .collect();
    Ok(sig)
}

/// ValueInfoProto: field 1 name, field 2 type -> tensor_type -> shape.
fn parse_value_info(bytes: &[u8]) -> Result<TensorSig, SigError> {
    let mut name = String::new();
    let mut dims = Vec::new();
    let mut r = Reader::new(bytes);
    while !r.done() {
        let (field, wire) = r.tag()?;
        match (field, wire) {
            (1, 2) => name = String::from_utf8_lossy(r.bytes()?).into_owned(),
            (2, 2) => {
                // TypeProto: field 1 tensor_type
                let mut tr = Reader::new(r.bytes()?);
                while !tr.done() {
                    let (f, w) = tr.tag()?;
                    if f == 1 && w == 2 {
                        dims = parse_tensor_type(tr.bytes()?)?;
                    } else {
                        tr.skip(w)?;
                    }
                }
            }
            _ => r.skip(wire)?,
        }
    }
    Ok(TensorSig { name, dims })
}

/// TypeProto.Tensor: field 2 shape -> repeated Dimension.
fn parse_tensor_type(bytes: &[u8]) -> Result<Vec<Option<i64>>, SigError> {
    let mut dims = Vec::new();
    let mut r = Reader::new(bytes);
    while !r.done() {
        let (field, wire) = r.tag()?;
        if field == 2 && wire == 2 {
            let mut sr = Reader::new(r.bytes()?);
            while !sr.done() {
                let (f, w) = sr.tag()?;
                if f == 1 && w == 2 {
                    dims.push(parse_dimension(sr.bytes()?)?);
                } else {
                    sr.skip(w)?;
                }
            }
        } else {
            r.skip(wire)?;
        }
    }
    Ok(dims)
}

/// Dimension oneof: field 1 dim_value (static), field 2 dim_param (dynamic).
fn parse_dimension(bytes: &[u8]) -> Result<Option<i64>, SigError> {
    let mut out = None;
    let mut r = Reader::new(bytes);
    while !r.done() {
        let (field, wire) = r.tag()?;
        match (field, wire) {
            (1, 0) => {
                let v = r.varint()? as i64;
                out = if v > 0 { Some(v) } else { None };
            }
            (2, 2) => {
                r.bytes()?;
                out = None;
            }
            _ => r.skip(wire)?,
        }
    }
    Ok(out)
}

/// TensorProto: field 8 is the initializer's name.
fn parse_tensor_name(bytes: &[u8]) -> Result<Option<String>, SigError> {
    let mut r = Reader::new(bytes);
    while !r.done() {
        let (field, wire) = r.tag()?;
        if field == 8 && wire == 2 {
            return Ok(Some(String::from_utf8_lossy(r.bytes()?).into_owned()));
        }
        r.skip(wire)?;
    }
    Ok(None)
}

/// TensorProto: field 1 holds the dims, packed or unpacked.
fn parse_tensor_elem_count(bytes: &[u8]) -> Result<u64, SigError> {
    let mut count: u64 = 1;
    let mut saw_dim = false;
    let mut r = Reader::new(bytes);
    while !r.done() {
        let (field, wire) = r.tag()?;
        match (field, wire) {
            (1, 0) => {
                count = count.saturating_mul(r.varint()?);
                saw_dim = true;
            }
            (1, 2) => {
                let mut dr = Reader::new(r.bytes()?);
                while !dr.done() {
                    count = count.saturating_mul(dr.varint()?);
                    saw_dim = true;
                }
            }
            _ => r.skip(wire)?,
        }
    }
    Ok(if saw_dim { count } else { 0 })
}

/// Total number of weight scalars declared by the model's initializers.
/// This is the usual "parameters (in millions)" figure.
pub fn parameter_count(bytes: &[u8]) -> Result<u64, SigError> {
    let mut r = Reader::new(bytes);
    let mut graph: Option<&[u8]> = None;
    while !r.done() {
        let (field, wire) = r.tag()?;
        if field == 7 && wire == 2 {
            graph = Some(r.bytes()?);
        } else {
            r.skip(wire)?;
        }
    }
    let graph = graph.ok_or(SigError::NoGraph)?;
    let mut total: u64 = 0;
    let mut r = Reader::new(graph);
    while !r.done() {
        let (field, wire) = r.tag()?;
        if field == 5 && wire == 2 {
            total = total.saturating_add(parse_tensor_elem_count(r.bytes()?)?);
        } else {
            r.skip(wire)?;
        }
    }
    Ok(total)
}

fn dims_compatible(declared: &[Option<i64>], want: &[Option<i64>]) -> bool {
    declared.len() == want.len()
        && declared.iter().zip(want).all(|(d, w)| match (d, w) {
            (Some(a), Some(b)) => a == b,
            _ => true,
        })
}

/// A detector model just needs at least one declared input and output; box
/// decoding conventions vary too much to constrain further.
pub fn check_detector(sig: &ModelSig) -> Result<(), String> {
    if sig.inputs.is_empty() {
        return Err("model declares no inputs".into());
    }
    if sig.outputs.is_empty() {
        return Err("model declares no outputs".into());
    }
    Ok(())
}

/// A classifier model must take a rank-4 tensor matching the declared
/// preprocess layout/size, and emit enough class columns to cover the
/// declared Mask index.
pub fn check_classifier(
    sig: &ModelSig,
    preprocess: &PreprocessSpec,
    mask_output_index: usize,
) -> Result<(), String> {
    let input = sig
        .inputs
        .first()
        .ok_or_else(|| "model declares no inputs".to_string())?;
    let (h, w) = (
        preprocess.target_height as i64,
        preprocess.target_width as i64,
    );
    let want = match preprocess.layout {
        ChannelLayout::Planar => vec![None, Some(3), Some(h), Some(w)],
        ChannelLayout::Interleaved => vec![None, Some(h), Some(w), Some(3)],
    };
    if !dims_compatible(&input.dims, &want) {
        return Err(format!(
            "input {:?} has dims {:?}, preprocess spec needs {:?}",
            input.name, input.dims, want
        ));
    }
    let output = sig
        .outputs
        .first()
        .ok_or_else(|| "model declares no outputs".to_string())?;
    if let Some(Some(classes)) = output.dims.last() {
        if mask_output_index as i64 >= *classes {
            return Err(format!(
                "mask_output_index {mask_output_index} out of range for {classes} output classes"
            ));
        }
    }
    Ok(())
}

// Tiny protobuf writer, just enough to assemble fixture models in tests.
#[cfg(test)]
pub(crate) mod fixtures {
    pub fn varint(mut v: u64, out: &mut Vec<u8>) {
        loop {
            let b = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                out.push(b);
                break;
            }
            out.push(b | 0x80);
        }
    }

    pub fn field_bytes(field: u64, payload: &[u8], out: &mut Vec<u8>) {
        varint(field << 3 | 2, out);
        varint(payload.len() as u64, out);
        out.extend_from_slice(payload);
    }

    pub fn field_varint(field: u64, v: u64, out: &mut Vec<u8>) {
        varint(field << 3, out);
        varint(v, out);
    }

    pub fn dim_static(v: u64) -> Vec<u8> {
        let mut d = Vec::new();
        field_varint(1, v, &mut d);
        d
    }

    pub fn dim_dynamic(name: &str) -> Vec<u8> {
        let mut d = Vec::new();
        field_bytes(2, name.as_bytes(), &mut d);
        d
    }

    pub fn value_info(name: &str, dims: &[Vec<u8>]) -> Vec<u8> {
        let mut shape = Vec::new();
        for d in dims {
            field_bytes(1, d, &mut shape);
        }
        let mut tensor_type = Vec::new();
        field_varint(1, 1, &mut tensor_type); // elem_type = FLOAT
        field_bytes(2, &shape, &mut tensor_type);
        let mut ty = Vec::new();
        field_bytes(1, &tensor_type, &mut ty);
        let mut vi = Vec::new();
        field_bytes(1, name.as_bytes(), &mut vi);
        field_bytes(2, &ty, &mut vi);
        vi
    }

    pub fn model(inputs: &[Vec<u8>], outputs: &[Vec<u8>], initializers: &[&str]) -> Vec<u8> {
        let mut graph = Vec::new();
        for name in initializers {
            let mut t = Vec::new();
            field_varint(1, 2, &mut t); // dims [2, 1280]
            field_varint(1, 1280, &mut t);
            field_bytes(8, name.as_bytes(), &mut t);
            field_bytes(5, &t, &mut graph);
        }
        for i in inputs {
            field_bytes(11, i, &mut graph);
        }
        for o in outputs {
            field_bytes(12, o, &mut graph);
        }
        let mut m = Vec::new();
        field_varint(1, 8, &mut m); // ir_version
        field_bytes(7, &graph, &mut m);
        m
    }

    /// NCHW float classifier with a weight input masked by an initializer.
    pub fn classifier_model(h: u64, w: u64, classes: u64) -> Vec<u8> {
        model(
            &[
                value_info(
                    "input",
                    &[dim_dynamic("N"), dim_static(3), dim_static(h), dim_static(w)],
                ),
                value_info("fc.weight", &[dim_static(classes), dim_static(1280)]),
            ],
            &[value_info(
                "probs",
                &[dim_dynamic("N"), dim_static(classes)],
            )],
            &["fc.weight"],
        )
    }
}
