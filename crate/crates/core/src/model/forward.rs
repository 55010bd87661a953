//! Encoder forward pass.
//!
//! Per layer (pre-norm residual blocks):
//!
//! ```text
//! h1  = x  + MHA(LN1(x))
//! out = h1 + W2 · dropout(GELU(W1 · LN2(h1) + b1)) + b2
//! ```
//!
//! followed by a linear head on the last hidden state. Attention is computed
//! per record and head, so padded keys of one record never reach another.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::ops::{self, apply_weights, attention_weights, HeadView, NormCache};
use super::{ModelConfig, ModelError, Parameters, Tensor};
use crate::Scalar;

/// A padded `[batch x seq_len]` block of token ids with its mask.
#[derive(Debug, Clone, Copy)]
pub struct Inputs<'a> {
    pub token_ids: &'a [u32],
    /// `true` at real tokens, `false` at padding.
    pub mask: &'a [bool],
    pub batch: usize,
    pub seq_len: usize,
}

/// Whether dropout is active; the RNG makes it reproducible.
pub enum ForwardMode<'r> {
    Eval,
    Train(&'r mut ChaCha8Rng),
}

#[derive(Debug, Clone)]
pub struct LayerTrace<S> {
    pub input: Vec<S>,
    pub ln1: NormCache<S>,
    pub attn_in: Vec<S>,
    pub q: Vec<S>,
    pub k: Vec<S>,
    pub v: Vec<S>,
    /// `[batch x heads x seq x seq]`, row-stochastic over unmasked keys.
    pub probs: Vec<S>,
    /// Dropout multipliers for `probs` (0 or `1/(1-p)`), when active.
    pub probs_drop: Option<Vec<S>>,
    pub ctx: Vec<S>,
    pub h1: Vec<S>,
    pub ln2: NormCache<S>,
    pub ff_in: Vec<S>,
    pub ff_pre: Vec<S>,
    pub ff_act: Vec<S>,
    pub ff_drop: Option<Vec<S>>,
}

/// Activations recorded by `forward` for exact backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace<S> {
    pub config: ModelConfig,
    pub batch: usize,
    pub seq_len: usize,
    pub token_ids: Vec<u32>,
    /// `false` marks padded positions; their logits exist but carry no loss.
    pub mask: Vec<bool>,
    pub layers: Vec<LayerTrace<S>>,
    pub hidden: Vec<S>,
}

impl<S: Scalar> ForwardTrace<S> {
    pub fn rows(&self) -> usize {
        self.batch * self.seq_len
    }
}

fn check_inputs(config: &ModelConfig, inputs: &Inputs<'_>) -> Result<(), ModelError> {
    let n = inputs.batch * inputs.seq_len;
    if inputs.token_ids.len() != n || inputs.mask.len() != n {
        return Err(ModelError::ShapeMismatch(format!(
            "inputs: {} ids and {} mask entries for batch {} x seq {}",
            inputs.token_ids.len(),
            inputs.mask.len(),
            inputs.batch,
            inputs.seq_len
        )));
    }
    if inputs.batch == 0 || inputs.seq_len == 0 {
        return Err(ModelError::EmptyInput);
    }
    if inputs.seq_len > config.max_len {
        return Err(ModelError::SequenceTooLong {
            len: inputs.seq_len,
            max_len: config.max_len,
        });
    }
    if let Some(&id) = inputs
        .token_ids
        .iter()
        .find(|&&id| id as usize >= config.vocab_size)
    {
        return Err(ModelError::TokenOutOfRange {
            id,
            vocab_size: config.vocab_size,
        });
    }
    if inputs
        .mask
        .chunks_exact(inputs.seq_len)
        .any(|row| !row.iter().any(|&m| m))
    {
        return Err(ModelError::AllMasked);
    }
    Ok(())
}

fn dropout_multipliers<S: Scalar>(len: usize, rate: f64, rng: &mut ChaCha8Rng) -> Vec<S> {
    let keep_scale = S::from_f64(1.0 / (1.0 - rate));
    (0..len)
        .map(|_| {
            if rng.gen::<f64>() < rate {
                S::ZERO
            } else {
                keep_scale
            }
        })
        .collect()
}

/// Runs the encoder, returning logits `[batch x seq_len x n_labels]` and the
/// trace needed by backpropagation.
pub fn forward<S: Scalar>(
    params: &Parameters<S>,
    config: &ModelConfig,
    inputs: Inputs<'_>,
    mut mode: ForwardMode<'_>,
) -> Result<(Tensor<S>, ForwardTrace<S>), ModelError> {
    config.validate()?;
    params.check_config(config)?;
    check_inputs(config, &inputs)?;

    let (b, t) = (inputs.batch, inputs.seq_len);
    let n = b * t;
    let d = config.d_model;
    let f = config.d_ff;
    let heads = config.n_heads;
    let d_k = config.d_k();
    let rate = config.dropout_rate;

    let mut x = vec![S::ZERO; n * d];
    for (row, &id) in inputs.token_ids.iter().enumerate() {
        let tok = params.tok_emb.row(id as usize);
        let pos = params.pos_emb.row(row % t);
        for ((o, &a), &p) in x[row * d..(row + 1) * d].iter_mut().zip(tok).zip(pos) {
            *o = a + p;
        }
    }

    let mut layers = Vec::with_capacity(config.n_layers);
    for layer in &params.layers {
        let (attn_in, ln1) = ops::layer_norm(&x, layer.ln1_g.data(), layer.ln1_b.data(), d);
        let q = ops::linear(&attn_in, layer.wq.data(), Some(layer.bq.data()), n, d, d);
        let k = ops::linear(&attn_in, layer.wk.data(), Some(layer.bk.data()), n, d, d);
        let v = ops::linear(&attn_in, layer.wv.data(), Some(layer.bv.data()), n, d, d);

        let mut probs = vec![S::ZERO; b * heads * t * t];
        let mut ctx = vec![S::ZERO; n * d];
        let probs_drop = match &mut mode {
            ForwardMode::Train(rng) if rate > 0.0 => {
                Some(dropout_multipliers::<S>(probs.len(), rate, rng))
            }
            _ => None,
        };
        let mut dropped = vec![S::ZERO; t * t];
        for bi in 0..b {
            let rows = bi * t * d..(bi + 1) * t * d;
            let mask = &inputs.mask[bi * t..(bi + 1) * t];
            for h in 0..heads {
                let view = HeadView {
                    seq_len: t,
                    stride: d,
                    offset: h * d_k,
                    d_k,
                };
                let block = (bi * heads + h) * t * t..(bi * heads + h + 1) * t * t;
                attention_weights(
                    view,
                    &q[rows.clone()],
                    &k[rows.clone()],
                    mask,
                    &mut probs[block.clone()],
                );
                let weights = match &probs_drop {
                    Some(drop) => {
                        for ((o, &p), &s) in dropped
                            .iter_mut()
                            .zip(&probs[block.clone()])
                            .zip(&drop[block.clone()])
                        {
                            *o = p * s;
                        }
                        &dropped[..]
                    }
                    None => &probs[block],
                };
                apply_weights(view, weights, &v[rows.clone()], &mut ctx[rows.clone()]);
            }
        }

        let attn_out = ops::linear(&ctx, layer.wo.data(), Some(layer.bo.data()), n, d, d);
        let h1: Vec<S> = x.iter().zip(&attn_out).map(|(&a, &o)| a + o).collect();

        let (ff_in, ln2) = ops::layer_norm(&h1, layer.ln2_g.data(), layer.ln2_b.data(), d);
        let ff_pre = ops::linear(
            &ff_in,
            layer.ff_w1.data(),
            Some(layer.ff_b1.data()),
            n,
            d,
            f,
        );
        let ff_act: Vec<S> = ff_pre.iter().map(|&u| ops::gelu(u)).collect();
        let ff_drop = match &mut mode {
            ForwardMode::Train(rng) if rate > 0.0 => {
                Some(dropout_multipliers::<S>(ff_act.len(), rate, rng))
            }
            _ => None,
        };
        let ff_out = match &ff_drop {
            Some(drop) => {
                let dropped: Vec<S> = ff_act.iter().zip(drop).map(|(&a, &s)| a * s).collect();
                ops::linear(
                    &dropped,
                    layer.ff_w2.data(),
                    Some(layer.ff_b2.data()),
                    n,
                    f,
                    d,
                )
            }
            None => ops::linear(
                &ff_act,
                layer.ff_w2.data(),
                Some(layer.ff_b2.data()),
                n,
                f,
                d,
            ),
        };
        let next: Vec<S> = h1.iter().zip(&ff_out).map(|(&a, &o)| a + o).collect();

        layers.push(LayerTrace {
            input: core::mem::replace(&mut x, next),
            ln1,
            attn_in,
            q,
            k,
            v,
            probs,
            probs_drop,
            ctx,
            h1,
            ln2,
            ff_in,
            ff_pre,
            ff_act,
            ff_drop,
        });
    }

    let k_labels = config.n_labels;
    let logits = ops::linear(
        &x,
        params.head_w.data(),
        Some(params.head_b.data()),
        n,
        d,
        k_labels,
    );
    let logits = Tensor::from_vec(&[b, t, k_labels], logits)?;
    let trace = ForwardTrace {
        config: *config,
        batch: b,
        seq_len: t,
        token_ids: inputs.token_ids.to_vec(),
        mask: inputs.mask.to_vec(),
        layers,
        hidden: x,
    };
    Ok((logits, trace))
}

/// Arg-max label id at every position of `[.. x n_labels]` logits, ties to
/// the lowest id.
pub fn predict_labels<S: Scalar>(logits: &Tensor<S>) -> Vec<u32> {
    let k = *logits.shape().last().unwrap_or(&1);
    logits
        .data()
        .chunks_exact(k.max(1))
        .map(|row| ops::argmax(row) as u32)
        .collect()
}
