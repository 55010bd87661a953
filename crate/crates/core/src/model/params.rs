//! Named parameter tensors of the encoder.
//!
//! Canonical names and shapes:
//!
//! | name | shape |
//! |---|---|
//! | `emb.tok` | vocab_size x d_model |
//! | `emb.pos` | max_len x d_model |
//! | `enc.L.attn.{wq,wk,wv,wo}` | d_model x d_model |
//! | `enc.L.attn.{bq,bk,bv,bo}` | d_model |
//! | `enc.L.ln1.{g,b}`, `enc.L.ln2.{g,b}` | d_model |
//! | `enc.L.ff.w1` / `ff.b1` | d_model x d_ff / d_ff |
//! | `enc.L.ff.w2` / `ff.b2` | d_ff x d_model / d_model |
//! | `head.w` / `head.b` | d_model x n_labels / n_labels |
//!
//! Gradients and optimizer moments reuse the same type.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{ModelConfig, ModelError, Tensor};
use crate::Scalar;

/// Tensors that stay fixed during optimization.
pub const FROZEN: &[&str] = &["emb.pos"];

pub fn is_trainable(name: &str) -> bool {
    !FROZEN.contains(&name)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayer<S> {
    pub wq: Tensor<S>,
    pub wk: Tensor<S>,
    pub wv: Tensor<S>,
    pub wo: Tensor<S>,
    pub bq: Tensor<S>,
    pub bk: Tensor<S>,
    pub bv: Tensor<S>,
    pub bo: Tensor<S>,
    pub ln1_g: Tensor<S>,
    pub ln1_b: Tensor<S>,
    pub ln2_g: Tensor<S>,
    pub ln2_b: Tensor<S>,
    pub ff_w1: Tensor<S>,
    pub ff_b1: Tensor<S>,
    pub ff_w2: Tensor<S>,
    pub ff_b2: Tensor<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parameters<S> {
    pub tok_emb: Tensor<S>,
    pub pos_emb: Tensor<S>,
    pub layers: Vec<EncoderLayer<S>>,
    pub head_w: Tensor<S>,
    pub head_b: Tensor<S>,
}

impl<S> EncoderLayer<S> {
    fn fields(&self) -> [(&'static str, &Tensor<S>); 16] {
        [
            ("attn.wq", &self.wq),
            ("attn.wk", &self.wk),
            ("attn.wv", &self.wv),
            ("attn.wo", &self.wo),
            ("attn.bq", &self.bq),
            ("attn.bk", &self.bk),
            ("attn.bv", &self.bv),
            ("attn.bo", &self.bo),
            ("ln1.g", &self.ln1_g),
            ("ln1.b", &self.ln1_b),
            ("ln2.g", &self.ln2_g),
            ("ln2.b", &self.ln2_b),
            ("ff.w1", &self.ff_w1),
            ("ff.b1", &self.ff_b1),
            ("ff.w2", &self.ff_w2),
            ("ff.b2", &self.ff_b2),
        ]
    }

    fn fields_mut(&mut self) -> [(&'static str, &mut Tensor<S>); 16] {
        [
            ("attn.wq", &mut self.wq),
            ("attn.wk", &mut self.wk),
            ("attn.wv", &mut self.wv),
            ("attn.wo", &mut self.wo),
            ("attn.bq", &mut self.bq),
            ("attn.bk", &mut self.bk),
            ("attn.bv", &mut self.bv),
            ("attn.bo", &mut self.bo),
            ("ln1.g", &mut self.ln1_g),
            ("ln1.b", &mut self.ln1_b),
            ("ln2.g", &mut self.ln2_g),
            ("ln2.b", &mut self.ln2_b),
            ("ff.w1", &mut self.ff_w1),
            ("ff.b1", &mut self.ff_b1),
            ("ff.w2", &mut self.ff_w2),
            ("ff.b2", &mut self.ff_b2),
        ]
    }
}

/// Canonical `(name, shape)` list, in checkpoint order.
pub fn param_specs(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = config.d_model;
    let f = config.d_ff;
    let mut specs = alloc::vec![
        (String::from("emb.tok"), alloc::vec![config.vocab_size, d]),
        (String::from("emb.pos"), alloc::vec![config.max_len, d]),
    ];
    let layer_shapes: [(&str, Vec<usize>); 16] = [
        ("attn.wq", alloc::vec![d, d]),
        ("attn.wk", alloc::vec![d, d]),
        ("attn.wv", alloc::vec![d, d]),
        ("attn.wo", alloc::vec![d, d]),
        ("attn.bq", alloc::vec![d]),
        ("attn.bk", alloc::vec![d]),
        ("attn.bv", alloc::vec![d]),
        ("attn.bo", alloc::vec![d]),
        ("ln1.g", alloc::vec![d]),
        ("ln1.b", alloc::vec![d]),
        ("ln2.g", alloc::vec![d]),
        ("ln2.b", alloc::vec![d]),
        ("ff.w1", alloc::vec![d, f]),
        ("ff.b1", alloc::vec![f]),
        ("ff.w2", alloc::vec![f, d]),
        ("ff.b2", alloc::vec![d]),
    ];
    for l in 0..config.n_layers {
        for (suffix, shape) in &layer_shapes {
            specs.push((format!("enc.{l}.{suffix}"), shape.clone()));
        }
    }
    specs.push((String::from("head.w"), alloc::vec![d, config.n_labels]));
    specs.push((String::from("head.b"), alloc::vec![config.n_labels]));
    specs
}

impl<S: Scalar> Parameters<S> {
    pub fn zeros(config: &ModelConfig) -> Self {
        let tensors = param_specs(config)
            .into_iter()
            .map(|(name, shape)| (name, Tensor::zeros(&shape)))
            .collect();
        Self::from_named(config, tensors).expect("specs match the config")
    }

    /// Assembles parameters from `(name, tensor)` pairs, which must match
    /// `param_specs(config)` exactly (same names, order and shapes).
    pub fn from_named(
        config: &ModelConfig,
        tensors: Vec<(String, Tensor<S>)>,
    ) -> Result<Self, ModelError> {
        let specs = param_specs(config);
        if specs.len() != tensors.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "expected {} tensors, got {}",
                specs.len(),
                tensors.len()
            )));
        }
        for ((name, shape), (got_name, tensor)) in specs.iter().zip(&tensors) {
            if name != got_name {
                return Err(ModelError::ShapeMismatch(format!(
                    "expected tensor `{name}`, found `{got_name}`"
                )));
            }
            if tensor.shape() != shape.as_slice() {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor `{name}`: expected shape {shape:?}, found {:?}",
                    tensor.shape()
                )));
            }
        }
        let mut it = tensors.into_iter().map(|(_, t)| t);
        let mut next = || it.next().expect("length checked above");
        let tok_emb = next();
        let pos_emb = next();
        let layers = (0..config.n_layers)
            .map(|_| EncoderLayer {
                wq: next(),
                wk: next(),
                wv: next(),
                wo: next(),
                bq: next(),
                bk: next(),
                bv: next(),
                bo: next(),
                ln1_g: next(),
                ln1_b: next(),
                ln2_g: next(),
                ln2_b: next(),
                ff_w1: next(),
                ff_b1: next(),
                ff_w2: next(),
                ff_b2: next(),
            })
            .collect();
        let head_w = next();
        let head_b = next();
        Ok(Parameters {
            tok_emb,
            pos_emb,
            layers,
            head_w,
            head_b,
        })
    }

    /// All tensors with their canonical names, in checkpoint order.
    pub fn named(&self) -> Vec<(String, &Tensor<S>)> {
        let mut out = alloc::vec![
            (String::from("emb.tok"), &self.tok_emb),
            (String::from("emb.pos"), &self.pos_emb),
        ];
        for (l, layer) in self.layers.iter().enumerate() {
            for (suffix, t) in layer.fields() {
                out.push((format!("enc.{l}.{suffix}"), t));
            }
        }
        out.push((String::from("head.w"), &self.head_w));
        out.push((String::from("head.b"), &self.head_b));
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor<S>)> {
        let mut out = alloc::vec![
            (String::from("emb.tok"), &mut self.tok_emb),
            (String::from("emb.pos"), &mut self.pos_emb),
        ];
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for (suffix, t) in layer.fields_mut() {
                out.push((format!("enc.{l}.{suffix}"), t));
            }
        }
        out.push((String::from("head.w"), &mut self.head_w));
        out.push((String::from("head.b"), &mut self.head_b));
        out
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<S>> {
        self.named()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<S>> {
        self.named_mut()
            .into_iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn n_values(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Checks that tensor shapes agree with `config`.
    pub fn check_config(&self, config: &ModelConfig) -> Result<(), ModelError> {
        let specs = param_specs(config);
        let named = self.named();
        if specs.len() != named.len() {
            return Err(ModelError::ShapeMismatch(format!(
                "parameters have {} tensors, config implies {}",
                named.len(),
                specs.len()
            )));
        }
        for ((name, shape), (_, t)) in specs.iter().zip(&named) {
            if t.shape() != shape.as_slice() {
                return Err(ModelError::ShapeMismatch(format!(
                    "tensor `{name}`: expected shape {shape:?}, found {:?}",
                    t.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn cast<T: Scalar>(&self) -> Parameters<T> {
        let mut out = Parameters::<T> {
            tok_emb: self.tok_emb.cast(),
            pos_emb: self.pos_emb.cast(),
            layers: Vec::new(),
            head_w: self.head_w.cast(),
            head_b: self.head_b.cast(),
        };
        for layer in &self.layers {
            out.layers.push(EncoderLayer {
                wq: layer.wq.cast(),
                wk: layer.wk.cast(),
                wv: layer.wv.cast(),
                wo: layer.wo.cast(),
                bq: layer.bq.cast(),
                bk: layer.bk.cast(),
                bv: layer.bv.cast(),
                bo: layer.bo.cast(),
                ln1_g: layer.ln1_g.cast(),
                ln1_b: layer.ln1_b.cast(),
                ln2_g: layer.ln2_g.cast(),
                ln2_b: layer.ln2_b.cast(),
                ff_w1: layer.ff_w1.cast(),
                ff_b1: layer.ff_b1.cast(),
                ff_w2: layer.ff_w2.cast(),
                ff_b2: layer.ff_b2.cast(),
            });
        }
        out
    }
}
