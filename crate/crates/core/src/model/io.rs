use std::path::Path;

use crate::nn::{ConvParams, DenseParams, Layer, Pool2, Shape};

use super::spec::{infer_shapes, realize, Activation, LayerSpec, NetworkSpec};
use super::train::NetworkState;

pub const MAGIC: &[u8; 4] = b"FERW";
pub const VERSION: u8 = 0x01;

const TAG_INPUT: u8 = 0;
const TAG_CONV_RELU: u8 = 1;
const TAG_CONV_LINEAR: u8 = 2;
const TAG_MAXPOOL: u8 = 3;
const TAG_AVGPOOL: u8 = 4;
const TAG_FLATTEN: u8 = 5;
const TAG_DENSE: u8 = 6;

/// Dropout rates are stored as parts per million.
const PPM: f64 = 1_000_000.0;

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a weight file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported weight file version {0}")]
    Version(u8),
    #[error("file truncated in {0}")]
    Truncated(String),
    #[error("unknown layer kind {tag} in record {record}")]
    UnknownKind { record: usize, tag: u8 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("{0} unexpected bytes after the end of the weight file")]
    TrailingBytes(usize),
}

fn activation_code(a: Activation) -> u32 {
    match a {
        Activation::Linear => 0,
        Activation::Relu => 1,
        Activation::Softmax => 2,
    }
}

fn to_u32(v: usize, what: &str) -> Result<u32, LoadError> {
    u32::try_from(v).map_err(|_| LoadError::ShapeMismatch(format!("{what} {v} exceeds u32")))
}

/// Serializes the spec, parameters, seed and epoch count.
pub fn encode_weights(state: &NetworkState) -> Result<Vec<u8>, LoadError> {
    let mut out = Vec::with_capacity(16 + state.param_count() * 8);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&to_u32(state.spec.layers.len() + 1, "layer count")?.to_le_bytes());

    let record = |out: &mut Vec<u8>, tag: u8, ext: [usize; 4]| -> Result<(), LoadError> {
        out.push(tag);
        for e in ext {
            out.extend_from_slice(&to_u32(e, "extent")?.to_le_bytes());
        }
        Ok(())
    };
    let input = state.spec.input;
    record(&mut out, TAG_INPUT, [input.d1, input.d2, input.channels, 0])?;

    let mut params = state.net.layers.iter().filter_map(Layer::params);
    let mut write_params = |out: &mut Vec<u8>, k: usize| -> Result<(), LoadError> {
        let (w, b) = params
            .next()
            .ok_or_else(|| LoadError::ShapeMismatch(format!("layer {k} has no parameters in the network")))?;
        for v in w.iter().chain(b) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(())
    };
    let shapes = infer_shapes(&state.spec).map_err(|e| LoadError::ShapeMismatch(e.to_string()))?;
    let mut cur = input;
    for (k, (layer, next)) in state.spec.layers.iter().zip(shapes).enumerate() {
        match *layer {
            LayerSpec::Conv { kernel, filters, activation } => {
                let tag = if activation == Activation::Relu { TAG_CONV_RELU } else { TAG_CONV_LINEAR };
                record(&mut out, tag, [kernel.0, kernel.1, cur.channels, filters])?;
                write_params(&mut out, k)?;
            }
            LayerSpec::MaxPool(p) | LayerSpec::AvgPool(p) => {
                let tag = if matches!(layer, LayerSpec::MaxPool(_)) { TAG_MAXPOOL } else { TAG_AVGPOOL };
                record(&mut out, tag, [p.pool.0, p.pool.1, p.stride.0, p.stride.1])?;
            }
            LayerSpec::Flatten => record(&mut out, TAG_FLATTEN, [0; 4])?,
            LayerSpec::Dense { units, activation, dropout } => {
                let ppm = (dropout * PPM).round() as usize;
                record(&mut out, TAG_DENSE, [cur.len(), units, activation_code(activation) as usize, ppm])?;
                write_params(&mut out, k)?;
            }
        }
        cur = next;
    }
    out.extend_from_slice(&state.seed.to_le_bytes());
    out.extend_from_slice(&state.epochs_completed.to_le_bytes());
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, ctx: &dyn Fn() -> String) -> Result<&'a [u8], LoadError> {
        if self.bytes.len() - self.pos < n {
            return Err(LoadError::Truncated(ctx()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, ctx: &dyn Fn() -> String) -> Result<u8, LoadError> {
        Ok(self.take(1, ctx)?[0])
    }

    fn u32(&mut self, ctx: &dyn Fn() -> String) -> Result<u32, LoadError> {
        Ok(u32::from_le_bytes(self.take(4, ctx)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, ctx: &dyn Fn() -> String) -> Result<u64, LoadError> {
        Ok(u64::from_le_bytes(self.take(8, ctx)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize, ctx: &dyn Fn() -> String) -> Result<Vec<f64>, LoadError> {
        let len = n.checked_mul(8).ok_or_else(|| LoadError::Truncated(ctx()))?;
        Ok(self
            .take(len, ctx)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

/// Parses a weight file. Nothing is returned unless the whole file is valid.
pub fn decode_weights(bytes: &[u8]) -> Result<NetworkState, LoadError> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(LoadError::BadMagic);
    }
    let mut r = Reader { bytes, pos: MAGIC.len() };
    let version = r.u8(&|| "header".into())?;
    if version != VERSION {
        return Err(LoadError::Version(version));
    }
    let count = r.u32(&|| "header".into())? as usize;
    if count == 0 {
        return Err(LoadError::ShapeMismatch("weight file has no input record".into()));
    }

    let header_ctx = || "input record".to_string();
    let tag = r.u8(&header_ctx)?;
    let mut ext = [0usize; 4];
    for e in &mut ext {
        *e = r.u32(&header_ctx)? as usize;
    }
    if tag != TAG_INPUT {
        return Err(LoadError::ShapeMismatch(format!("first record has kind {tag}, expected the input record")));
    }
    let input = Shape::new(ext[0], ext[1], ext[2]);
    let mut spec = NetworkSpec {
        input,
        layers: Vec::with_capacity(count - 1),
    };
    let mut cur = input;
    let mut params: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    for k in 0..count - 1 {
        let kind = std::cell::Cell::new("layer");
        let ctx = || format!("layer {k} ({})", kind.get());
        let tag = r.u8(&ctx)?;
        kind.set(match tag {
            TAG_CONV_RELU | TAG_CONV_LINEAR => "conv",
            TAG_MAXPOOL => "maxpool",
            TAG_AVGPOOL => "avgpool",
            TAG_FLATTEN => "flatten",
            TAG_DENSE => "dense",
            _ => return Err(LoadError::UnknownKind { record: k + 1, tag }),
        });
        let mut ext = [0usize; 4];
        for e in &mut ext {
            *e = r.u32(&ctx)? as usize;
        }
        let mismatch = |msg: String| LoadError::ShapeMismatch(format!("layer {k} ({}): {msg}", kind.get()));
        let layer = match tag {
            TAG_CONV_RELU | TAG_CONV_LINEAR => {
                let [kh, kw, in_ch, out_ch] = ext;
                if in_ch != cur.channels {
                    return Err(mismatch(format!("declares {in_ch} input channels but receives {cur}")));
                }
                LayerSpec::Conv {
                    kernel: (kh, kw),
                    filters: out_ch,
                    activation: if tag == TAG_CONV_RELU { Activation::Relu } else { Activation::Linear },
                }
            }
            TAG_MAXPOOL => LayerSpec::MaxPool(Pool2::new((ext[0], ext[1]), (ext[2], ext[3]))),
            TAG_AVGPOOL => LayerSpec::AvgPool(Pool2::new((ext[0], ext[1]), (ext[2], ext[3]))),
            TAG_FLATTEN => LayerSpec::Flatten,
            _ => {
                let [inputs, units, act, ppm] = ext;
                if !cur.is_vector() || inputs != cur.len() {
                    return Err(mismatch(format!("declares {inputs} inputs but receives {cur}")));
                }
                let activation = match act {
                    0 => Activation::Linear,
                    1 => Activation::Relu,
                    2 => Activation::Softmax,
                    _ => return Err(mismatch(format!("unknown activation code {act}"))),
                };
                LayerSpec::Dense {
                    units,
                    activation,
                    dropout: ppm as f64 / PPM,
                }
            }
        };
        spec.layers.push(layer);
        // the shape check runs before any parameter bytes are trusted
        cur = *infer_shapes(&spec)
            .map_err(|e| LoadError::ShapeMismatch(e.to_string()))?
            .last()
            .expect("one layer pushed");
        if let LayerSpec::Conv { kernel, filters, .. } = layer {
            let n = kernel.0.checked_mul(kernel.1).and_then(|v| v.checked_mul(ext[2])).and_then(|v| v.checked_mul(filters));
            let n = n.ok_or_else(|| mismatch("parameter count overflows".into()))?;
            params.push((r.f64s(n, &ctx)?, r.f64s(filters, &ctx)?));
        } else if let LayerSpec::Dense { units, .. } = layer {
            let n = ext[0].checked_mul(units).ok_or_else(|| mismatch("parameter count overflows".into()))?;
            params.push((r.f64s(n, &ctx)?, r.f64s(units, &ctx)?));
        }
    }
    let seed = r.u64(&|| "trailer (seed)".into())?;
    let epochs = r.u32(&|| "trailer (epoch count)".into())?;
    if r.pos != bytes.len() {
        return Err(LoadError::TrailingBytes(bytes.len() - r.pos));
    }

    let mut layers = realize(&spec, ConvParams::zeros, DenseParams::zeros)
        .map_err(|e| LoadError::ShapeMismatch(e.to_string()))?;
    let mut stored = params.into_iter();
    for layer in &mut layers {
        if let Some((w, b)) = layer.params_mut() {
            let (sw, sb) = stored.next().expect("one record per parametric layer");
            *w = sw;
            *b = sb;
        }
    }
    NetworkState::from_layers(spec, layers, seed, epochs).map_err(|e| LoadError::ShapeMismatch(e.to_string()))
}

pub fn save_weights(state: &NetworkState, path: &Path) -> Result<(), LoadError> {
    let bytes = encode_weights(state)?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_weights(path: &Path) -> Result<NetworkState, LoadError> {
    decode_weights(&std::fs::read(path)?)
}
