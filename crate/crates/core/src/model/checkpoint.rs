//! Binary checkpoint format (all integers little-endian):
//!
//! ```text
//! "SPL1" | version u32 | sha256(architecture spec string) [32] | layer count u32
//! then per parameter tensor, in layer order (weights before bias):
//!   name length u16 | UTF-8 name | rank u8 | dims u32 * rank | f32 * product(dims)
//! ```

use super::{Architecture, CnnModel, LayerParams, ModelError};
use crate::tensor::Tensor;
use std::path::Path;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"SPL1";
pub const CHECKPOINT_VERSION: u32 = 1;

fn tensor_names(model: &CnnModel<f32>) -> Vec<(String, &Tensor<f32>)> {
    let mut v = Vec::new();
    for (i, l) in model.layers().iter().enumerate() {
        if let Some(w) = &l.weights {
            v.push((format!("layer{i}.weight"), w));
        }
        if let Some(b) = &l.bias {
            v.push((format!("layer{i}.bias"), b));
        }
    }
    v
}

pub fn write_checkpoint(model: &CnnModel<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(model.param_count() * 4 + 256);
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&model.architecture().fingerprint());
    out.extend_from_slice(&(model.layers().len() as u32).to_le_bytes());
    for (name, t) in tensor_names(model) {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(t.rank() as u8);
        for &d in t.shape() {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or(ModelError::Truncated(what))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self, what: &'static str) -> Result<u8, ModelError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &'static str) -> Result<u16, ModelError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parses a checkpoint, verifying it against `arch`.
pub fn read_checkpoint(bytes: &[u8], arch: &Architecture) -> Result<CnnModel<f32>, ModelError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4, "magic")?.try_into().unwrap();
    if magic != CHECKPOINT_MAGIC {
        return Err(ModelError::BadMagic(magic));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    if r.take(32, "fingerprint")? != arch.fingerprint() {
        return Err(ModelError::Fingerprint);
    }
    let layer_count = r.u32("layer count")? as usize;
    if layer_count != arch.layers.len() {
        return Err(ModelError::Malformed(format!(
            "layer count {layer_count}, architecture has {}",
            arch.layers.len()
        )));
    }

    let shapes = arch.param_shapes()?;
    let mut layers = Vec::with_capacity(layer_count);
    for (i, (&kind, shape)) in arch.layers.iter().zip(shapes).enumerate() {
        let mut params = LayerParams {
            kind,
            weights: None,
            bias: None,
        };
        if let Some((ws, bs)) = shape {
            params.weights = Some(read_tensor(&mut r, &format!("layer{i}.weight"), &ws)?);
            params.bias = Some(read_tensor(&mut r, &format!("layer{i}.bias"), &bs)?);
        }
        layers.push(params);
    }
    if r.pos != bytes.len() {
        return Err(ModelError::Malformed(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    CnnModel::from_layers(arch.clone(), layers)
}

fn read_tensor(
    r: &mut Reader<'_>,
    expected_name: &str,
    shape: &[usize],
) -> Result<Tensor<f32>, ModelError> {
    let name_len = r.u16("tensor name length")? as usize;
    let name = std::str::from_utf8(r.take(name_len, "tensor name")?)
        .map_err(|_| ModelError::Malformed("tensor name is not UTF-8".into()))?;
    if name != expected_name {
        return Err(ModelError::Malformed(format!(
            "found tensor {name:?}, expected {expected_name:?}"
        )));
    }
    let rank = r.u8("tensor rank")? as usize;
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(r.u32("tensor dims")? as usize);
    }
    if dims != shape {
        return Err(ModelError::Malformed(format!(
            "tensor {name} has shape {dims:?}, expected {shape:?}"
        )));
    }
    let n: usize = dims.iter().product();
    let raw = r.take(n * 4, "tensor data")?;
    let data = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(Tensor::from_vec(&dims, data)?)
}

/// Writes atomically: a failed save never leaves a partial file.
pub fn save_checkpoint(model: &CnnModel<f32>, path: &Path) -> Result<(), ModelError> {
    crate::io::write_atomic(path, &write_checkpoint(model))?;
    Ok(())
}

/// Loads a checkpoint of the standard 128x128x3 classifier.
pub fn load_checkpoint(path: &Path) -> Result<CnnModel<f32>, ModelError> {
    load_checkpoint_with_arch(path, &Architecture::spam_cnn())
}

pub fn load_checkpoint_with_arch(
    path: &Path,
    arch: &Architecture,
) -> Result<CnnModel<f32>, ModelError> {
    read_checkpoint(&std::fs::read(path)?, arch)
}
