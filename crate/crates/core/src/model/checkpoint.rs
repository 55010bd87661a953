//! Portable checkpoint format.
//!
//! A UTF-8 manifest of `key = value` lines, terminated by `end-manifest`,
//! followed by the raw payload: every tensor's values as little-endian
//! IEEE-754 numbers, row-major, concatenated in manifest order.
//!
//! ```text
//! medner-checkpoint
//! format_version = 1
//! precision = f32
//! seed = 42
//! vocab_size = 502
//! ...                       (remaining ModelConfig fields)
//! labels = O B-Disease I-Disease
//! vocab = fever cough ...   (ids 2.., reserved entries implied)
//! tensor = emb.tok 502x64 0 128512
//! ...                       (name, shape, byte offset, byte length)
//! payload_bytes = 1234567
//! end-manifest
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use super::{param_specs, ModelConfig, ModelError, Parameters, Tensor};
use crate::corpus::{CorpusError, LabelSet, TagLabel, Vocabulary};
use crate::{Precision, Scalar};

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "medner-checkpoint";
const END: &str = "end-manifest";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckpointError {
    #[error("not a checkpoint: {0}")]
    Malformed(String),
    #[error(
        "unsupported checkpoint format version {0} (this build reads version {FORMAT_VERSION})"
    )]
    UnsupportedVersion(String),
    #[error("truncated payload: manifest declares {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("payload has {extra} bytes past the declared end")]
    TrailingBytes { extra: usize },
    #[error("tensor `{name}`: {reason}")]
    Tensor { name: String, reason: String },
    #[error("checkpoint precision is {found}, expected {expected}")]
    Precision { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// Everything needed to run a trained model on text.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S> {
    pub config: ModelConfig,
    pub seed: u64,
    pub labels: LabelSet,
    pub vocab: Vocabulary,
    pub params: Parameters<S>,
}

/// A checkpoint of either precision, as found on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyCheckpoint {
    F32(Checkpoint<f32>),
    F64(Checkpoint<f64>),
}

impl AnyCheckpoint {
    pub fn precision(&self) -> Precision {
        match self {
            AnyCheckpoint::F32(_) => Precision::F32,
            AnyCheckpoint::F64(_) => Precision::F64,
        }
    }

    pub fn labels(&self) -> &LabelSet {
        match self {
            AnyCheckpoint::F32(c) => &c.labels,
            AnyCheckpoint::F64(c) => &c.labels,
        }
    }
}

fn shape_str(shape: &[usize]) -> String {
    let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    parts.join("x")
}

pub fn encode_checkpoint<S: Scalar>(ckpt: &Checkpoint<S>) -> Vec<u8> {
    let c = &ckpt.config;
    let width = S::PRECISION.byte_width();
    let mut head = String::new();
    let _ = writeln!(head, "{MAGIC}");
    let _ = writeln!(head, "format_version = {FORMAT_VERSION}");
    let _ = writeln!(head, "precision = {}", S::PRECISION.tag());
    let _ = writeln!(head, "seed = {}", ckpt.seed);
    let _ = writeln!(head, "vocab_size = {}", c.vocab_size);
    let _ = writeln!(head, "d_model = {}", c.d_model);
    let _ = writeln!(head, "n_heads = {}", c.n_heads);
    let _ = writeln!(head, "n_layers = {}", c.n_layers);
    let _ = writeln!(head, "d_ff = {}", c.d_ff);
    let _ = writeln!(head, "max_len = {}", c.max_len);
    let _ = writeln!(head, "n_labels = {}", c.n_labels);
    let _ = writeln!(head, "dropout_rate = {}", c.dropout_rate);
    let labels: Vec<String> = ckpt.labels.labels().iter().map(|l| l.to_string()).collect();
    let _ = writeln!(head, "labels = {}", labels.join(" "));
    let vocab: Vec<&str> = ckpt.vocab.ordinary_tokens().collect();
    let _ = writeln!(head, "vocab = {}", vocab.join(" "));

    let named = ckpt.params.named();
    let mut offset = 0;
    for (name, t) in &named {
        let len = t.len() * width;
        let _ = writeln!(
            head,
            "tensor = {name} {} {offset} {len}",
            shape_str(t.shape())
        );
        offset += len;
    }
    let _ = writeln!(head, "payload_bytes = {offset}");
    let _ = writeln!(head, "{END}");

    let mut out = head.into_bytes();
    out.reserve(offset);
    for (_, t) in &named {
        for &x in t.data() {
            x.write_le(&mut out);
        }
    }
    out
}

struct Manifest<'a> {
    entries: Vec<(&'a str, &'a str)>,
    tensors: Vec<&'a str>,
}

impl<'a> Manifest<'a> {
    fn get(&self, key: &str) -> Result<&'a str, CheckpointError> {
        self.entries
            .iter()
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| CheckpointError::Malformed(format!("missing manifest key `{key}`")))
    }

    fn parse<T: core::str::FromStr>(&self, key: &str) -> Result<T, CheckpointError> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| CheckpointError::Malformed(format!("bad value for `{key}`: {raw:?}")))
    }
}

/// Splits `bytes` into the manifest text and the payload.
fn split_manifest(bytes: &[u8]) -> Result<(Manifest<'_>, &[u8]), CheckpointError> {
    let mut pos = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| CheckpointError::Malformed("manifest is not terminated".into()))?;
        let line = core::str::from_utf8(&rest[..nl])
            .map_err(|_| CheckpointError::Malformed("manifest is not UTF-8".into()))?;
        pos += nl + 1;
        if line == END {
            break;
        }
        lines.push(line);
    }
    if lines.first() != Some(&MAGIC) {
        return Err(CheckpointError::Malformed(format!(
            "missing `{MAGIC}` header line"
        )));
    }
    let mut entries = Vec::new();
    let mut tensors = Vec::new();
    for line in &lines[1..] {
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CheckpointError::Malformed(format!("bad manifest line {line:?}")))?;
        let (k, v) = (k.trim(), v.trim());
        if k == "tensor" {
            tensors.push(v);
        } else {
            entries.push((k, v));
        }
    }
    Ok((Manifest { entries, tensors }, &bytes[pos..]))
}

fn parse_labels(raw: &str) -> Result<LabelSet, CheckpointError> {
    let listed: Vec<TagLabel> = raw
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()?;
    let types = listed.iter().filter_map(|l| match l {
        TagLabel::B(t) => Some(t.as_str()),
        _ => None,
    });
    let set = LabelSet::from_types(types)?;
    if set.labels() != listed.as_slice() {
        return Err(CheckpointError::Malformed(format!(
            "label inventory {raw:?} is not in canonical order"
        )));
    }
    Ok(set)
}

fn decode_typed<S: Scalar>(
    manifest: &Manifest<'_>,
    payload: &[u8],
) -> Result<Checkpoint<S>, CheckpointError> {
    let config = ModelConfig {
        vocab_size: manifest.parse("vocab_size")?,
        d_model: manifest.parse("d_model")?,
        n_heads: manifest.parse("n_heads")?,
        n_layers: manifest.parse("n_layers")?,
        d_ff: manifest.parse("d_ff")?,
        max_len: manifest.parse("max_len")?,
        n_labels: manifest.parse("n_labels")?,
        dropout_rate: manifest.parse("dropout_rate")?,
    };
    config.validate()?;
    let seed = manifest.parse("seed")?;
    let labels = parse_labels(manifest.get("labels")?)?;
    let vocab = Vocabulary::from_tokens(manifest.get("vocab")?.split_whitespace())?;
    if labels.len() != config.n_labels {
        return Err(CheckpointError::Malformed(format!(
            "{} labels listed but n_labels = {}",
            labels.len(),
            config.n_labels
        )));
    }
    if vocab.len() != config.vocab_size {
        return Err(CheckpointError::Malformed(format!(
            "{} vocabulary entries but vocab_size = {}",
            vocab.len(),
            config.vocab_size
        )));
    }

    let declared: usize = manifest.parse("payload_bytes")?;
    let width = S::PRECISION.byte_width();
    let specs = param_specs(&config);
    if manifest.tensors.len() != specs.len() {
        return Err(CheckpointError::Malformed(format!(
            "manifest lists {} tensors, config implies {}",
            manifest.tensors.len(),
            specs.len()
        )));
    }
    let mut tensors = Vec::with_capacity(specs.len());
    let mut expected_offset = 0usize;
    for ((name, shape), line) in specs.iter().zip(&manifest.tensors) {
        let tensor_err = |reason: String| CheckpointError::Tensor {
            name: name.clone(),
            reason,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [got_name, got_shape, offset, len] = fields[..] else {
            return Err(tensor_err(format!("bad manifest entry {line:?}")));
        };
        if got_name != name {
            return Err(tensor_err(format!(
                "manifest has `{got_name}` in its place"
            )));
        }
        if got_shape != shape_str(shape) {
            return Err(tensor_err(format!(
                "manifest shape {got_shape} does not match config-derived shape {}",
                shape_str(shape)
            )));
        }
        let offset: usize = offset
            .parse()
            .map_err(|_| tensor_err(format!("bad offset {offset:?}")))?;
        let len: usize = len
            .parse()
            .map_err(|_| tensor_err(format!("bad byte length {len:?}")))?;
        let numel: usize = shape.iter().product();
        if offset != expected_offset || len != numel * width {
            return Err(tensor_err(format!(
                "byte range {offset}+{len} inconsistent with manifest order and shape"
            )));
        }
        expected_offset += len;
        if offset + len > payload.len() {
            return Err(CheckpointError::TruncatedPayload {
                expected: declared.max(offset + len),
                found: payload.len(),
            });
        }
        let data = payload[offset..offset + len]
            .chunks_exact(width)
            .map(S::read_le)
            .collect();
        tensors.push((name.clone(), Tensor::from_vec(shape, data)?));
    }
    if expected_offset != declared {
        return Err(CheckpointError::Malformed(format!(
            "payload_bytes = {declared} but tensors cover {expected_offset} bytes"
        )));
    }
    if payload.len() < declared {
        return Err(CheckpointError::TruncatedPayload {
            expected: declared,
            found: payload.len(),
        });
    }
    if payload.len() > declared {
        return Err(CheckpointError::TrailingBytes {
            extra: payload.len() - declared,
        });
    }
    let params = Parameters::from_named(&config, tensors)?;
    Ok(Checkpoint {
        config,
        seed,
        labels,
        vocab,
        params,
    })
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<AnyCheckpoint, CheckpointError> {
    let (manifest, payload) = split_manifest(bytes)?;
    let version = manifest.get("format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(CheckpointError::UnsupportedVersion(version.to_string()));
    }
    let tag = manifest.get("precision")?;
    match Precision::from_tag(tag) {
        Some(Precision::F32) => Ok(AnyCheckpoint::F32(decode_typed(&manifest, payload)?)),
        Some(Precision::F64) => Ok(AnyCheckpoint::F64(decode_typed(&manifest, payload)?)),
        None => Err(CheckpointError::Malformed(format!(
            "unknown precision tag {tag:?}"
        ))),
    }
}

/// Decodes a checkpoint that must have precision `S`.
pub fn decode_checkpoint_as<S: Scalar>(bytes: &[u8]) -> Result<Checkpoint<S>, CheckpointError> {
    let (manifest, payload) = split_manifest(bytes)?;
    let version = manifest.get("format_version")?;
    if version != FORMAT_VERSION.to_string() {
        return Err(CheckpointError::UnsupportedVersion(version.to_string()));
    }
    let tag = manifest.get("precision")?;
    if Precision::from_tag(tag) != Some(S::PRECISION) {
        return Err(CheckpointError::Precision {
            expected: S::PRECISION.tag().to_string(),
            found: tag.to_string(),
        });
    }
    decode_typed(&manifest, payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    fn ckpt<S: Scalar>() -> Checkpoint<S> {
        let vocab = Vocabulary::from_tokens(["fever", "a=b", "cough"]).unwrap();
        let labels = LabelSet::from_types(["Disease", "Drug"]).unwrap();
        let config = ModelConfig {
            vocab_size: vocab.len(),
            d_model: 8,
            n_heads: 2,
            n_layers: 2,
            d_ff: 6,
            max_len: 7,
            n_labels: labels.len(),
            dropout_rate: 0.1,
        };
        Checkpoint {
            config,
            seed: 17,
            labels,
            vocab,
            params: init_params(&config, 17).unwrap(),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = ckpt::<f32>();
        let bytes = encode_checkpoint(&c);
        assert_eq!(
            decode_checkpoint(&bytes).unwrap(),
            AnyCheckpoint::F32(c.clone())
        );
        assert_eq!(decode_checkpoint_as::<f32>(&bytes).unwrap(), c);
        assert!(matches!(
            decode_checkpoint_as::<f64>(&bytes),
            Err(CheckpointError::Precision { .. })
        ));
        let c64 = ckpt::<f64>();
        assert_eq!(
            decode_checkpoint(&encode_checkpoint(&c64)).unwrap(),
            AnyCheckpoint::F64(c64)
        );
    }

    #[test]
    fn truncated_payload() {
        let bytes = encode_checkpoint(&ckpt::<f32>());
        let err = decode_checkpoint(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, CheckpointError::TruncatedPayload { .. }));
        assert!(err.to_string().starts_with("truncated payload"));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            decode_checkpoint(&longer).unwrap_err(),
            CheckpointError::TrailingBytes { extra: 1 }
        ));
    }

    fn edit_manifest(bytes: &[u8], from: &str, to: &str) -> Vec<u8> {
        let split = bytes
            .windows(END.len() + 1)
            .position(|w| w == b"end-manifest\n")
            .unwrap();
        let head = core::str::from_utf8(&bytes[..split])
            .unwrap()
            .replacen(from, to, 1);
        let mut out = head.into_bytes();
        out.extend_from_slice(&bytes[split..]);
        out
    }

    #[test]
    fn shape_mismatch_names_the_tensor() {
        let bytes = encode_checkpoint(&ckpt::<f32>());
        let bad = edit_manifest(
            &bytes,
            "tensor = enc.1.ff.w1 8x6",
            "tensor = enc.1.ff.w1 6x8",
        );
        let err = decode_checkpoint(&bad).unwrap_err();
        let CheckpointError::Tensor { name, .. } = &err else {
            panic!("{err}")
        };
        assert_eq!(name, "enc.1.ff.w1");
    }

    #[test]
    fn unknown_version_is_rejected() {
        let bytes = encode_checkpoint(&ckpt::<f32>());
        let bad = edit_manifest(&bytes, "format_version = 1", "format_version = 2");
        assert_eq!(
            decode_checkpoint(&bad).unwrap_err(),
            CheckpointError::UnsupportedVersion("2".into())
        );
        assert!(matches!(
            decode_checkpoint(b"hello\nend-manifest\n").unwrap_err(),
            CheckpointError::Malformed(_)
        ));
    }
}
