//! Reverse-mode gradients of the encoder, driven by a forward trace.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::TrainError;
use crate::model::ops::{self, NormCache};
use crate::model::{ForwardTrace, ModelConfig, Parameters, Tensor};
use crate::Scalar;

/// Layer-norm input gradient, with gain/bias gradients accumulated.
fn layer_norm_backward<S: Scalar>(
    dy: &[S],
    cache: &NormCache<S>,
    gain: &[S],
    dgain: &mut [S],
    dbias: &mut [S],
    d: usize,
) -> Vec<S> {
    let inv_d = S::from_f64(1.0 / d as f64);
    let mut dx = vec![S::ZERO; dy.len()];
    let mut dxhat = vec![S::ZERO; d];
    for (r, ((dy_r, xhat_r), dx_r)) in dy
        .chunks_exact(d)
        .zip(cache.xhat.chunks_exact(d))
        .zip(dx.chunks_exact_mut(d))
        .enumerate()
    {
        let mut mean_dxhat = S::ZERO;
        let mut mean_dxhat_xhat = S::ZERO;
        for j in 0..d {
            dgain[j] += dy_r[j] * xhat_r[j];
            dbias[j] += dy_r[j];
            dxhat[j] = dy_r[j] * gain[j];
            mean_dxhat += dxhat[j];
            mean_dxhat_xhat += dxhat[j] * xhat_r[j];
        }
        mean_dxhat *= inv_d;
        mean_dxhat_xhat *= inv_d;
        let is = cache.inv_std[r];
        for j in 0..d {
            dx_r[j] = is * (dxhat[j] - mean_dxhat - xhat_r[j] * mean_dxhat_xhat);
        }
    }
    dx
}

/// `y = x W + b`: accumulates `dW`, `db` and returns `dx`.
#[allow(clippy::too_many_arguments)]
fn linear_backward<S: Scalar>(
    x: &[S],
    w: &[S],
    dy: &[S],
    dw: &mut [S],
    db: &mut [S],
    m: usize,
    k: usize,
    n: usize,
) -> Vec<S> {
    ops::matmul_at_b_acc(x, dy, dw, m, k, n);
    ops::add_column_sums(dy, db, n);
    ops::matmul_a_bt(dy, w, m, n, k)
}

fn check_trace<S: Scalar>(
    params: &Parameters<S>,
    config: &ModelConfig,
    trace: &ForwardTrace<S>,
    dlogits: &Tensor<S>,
) -> Result<(), TrainError> {
    params.check_config(config)?;
    let n = trace.rows();
    let d = config.d_model;
    let mismatch = |what: &str| {
        Err(TrainError::ShapeMismatch(format!(
            "trace/params mismatch: {what}"
        )))
    };
    if trace.config != *config {
        return mismatch("trace was recorded under a different config");
    }
    if trace.layers.len() != config.n_layers {
        return mismatch("layer count");
    }
    if trace.token_ids.len() != n || trace.mask.len() != n || trace.hidden.len() != n * d {
        return mismatch("trace buffers do not match batch x seq_len");
    }
    if dlogits.shape() != [trace.batch, trace.seq_len, config.n_labels] {
        return Err(TrainError::ShapeMismatch(format!(
            "dlogits {:?}, expected [{}, {}, {}]",
            dlogits.shape(),
            trace.batch,
            trace.seq_len,
            config.n_labels
        )));
    }
    for (l, layer) in trace.layers.iter().enumerate() {
        let heads_t2 = trace.batch * config.n_heads * trace.seq_len * trace.seq_len;
        if layer.input.len() != n * d
            || layer.ff_pre.len() != n * config.d_ff
            || layer.probs.len() != heads_t2
        {
            return mismatch(&format!("layer {l} buffers"));
        }
    }
    Ok(())
}

/// Exact gradients of the loss for every named tensor, given the trace of
/// the forward pass that produced the logits and `dloss/dlogits`.
pub fn backward<S: Scalar>(
    params: &Parameters<S>,
    config: &ModelConfig,
    trace: &ForwardTrace<S>,
    dlogits: &Tensor<S>,
) -> Result<Parameters<S>, TrainError> {
    check_trace(params, config, trace, dlogits)?;
    let (b, t) = (trace.batch, trace.seq_len);
    let n = b * t;
    let d = config.d_model;
    let f = config.d_ff;
    let k_labels = config.n_labels;
    let heads = config.n_heads;
    let d_k = config.d_k();
    let scale = S::ONE / S::from_f64(d_k as f64).sqrt();

    let mut grads = Parameters::zeros(config);
    let mut dx = linear_backward(
        &trace.hidden,
        params.head_w.data(),
        dlogits.data(),
        grads.head_w.data_mut(),
        grads.head_b.data_mut(),
        n,
        d,
        k_labels,
    );

    for ((layer, lt), g) in params
        .layers
        .iter()
        .zip(&trace.layers)
        .zip(grads.layers.iter_mut())
        .rev()
    {
        // Feed-forward block: out = h1 + W2 (drop * gelu(W1 ln2 + b1)) + b2.
        let mut dh1 = dx.clone();
        let ff_dropped: Vec<S> = match &lt.ff_drop {
            Some(drop) => lt.ff_act.iter().zip(drop).map(|(&a, &s)| a * s).collect(),
            None => lt.ff_act.clone(),
        };
        let mut dpre = linear_backward(
            &ff_dropped,
            layer.ff_w2.data(),
            &dx,
            g.ff_w2.data_mut(),
            g.ff_b2.data_mut(),
            n,
            f,
            d,
        );
        if let Some(drop) = &lt.ff_drop {
            dpre.iter_mut().zip(drop).for_each(|(x, &s)| *x *= s);
        }
        dpre.iter_mut()
            .zip(&lt.ff_pre)
            .for_each(|(x, &u)| *x *= ops::gelu_grad(u));
        let dff_in = linear_backward(
            &lt.ff_in,
            layer.ff_w1.data(),
            &dpre,
            g.ff_w1.data_mut(),
            g.ff_b1.data_mut(),
            n,
            d,
            f,
        );
        let dln2 = layer_norm_backward(
            &dff_in,
            &lt.ln2,
            layer.ln2_g.data(),
            g.ln2_g.data_mut(),
            g.ln2_b.data_mut(),
            d,
        );
        dh1.iter_mut().zip(&dln2).for_each(|(a, &c)| *a += c);

        // Attention block: h1 = x + Wo ctx + bo.
        let dctx = linear_backward(
            &lt.ctx,
            layer.wo.data(),
            &dh1,
            g.wo.data_mut(),
            g.bo.data_mut(),
            n,
            d,
            d,
        );
        let mut dq = vec![S::ZERO; n * d];
        let mut dk = vec![S::ZERO; n * d];
        let mut dv = vec![S::ZERO; n * d];
        let mut dweights = vec![S::ZERO; t * t];
        for bi in 0..b {
            let base = bi * t * d;
            for h in 0..heads {
                let off = h * d_k;
                let block = (bi * heads + h) * t * t;
                let probs = &lt.probs[block..block + t * t];
                let drop = lt.probs_drop.as_ref().map(|m| &m[block..block + t * t]);
                // ctx_i = sum_j w_ij v_j with w = probs * drop.
                for i in 0..t {
                    let dctx_i = &dctx[base + i * d + off..base + i * d + off + d_k];
                    for j in 0..t {
                        let vj = &lt.v[base + j * d + off..base + j * d + off + d_k];
                        let mut dot = S::ZERO;
                        for (&a, &c) in dctx_i.iter().zip(vj) {
                            dot += a * c;
                        }
                        dweights[i * t + j] = dot;
                        let w = match drop {
                            Some(m) => probs[i * t + j] * m[i * t + j],
                            None => probs[i * t + j],
                        };
                        if w != S::ZERO {
                            let dvj = &mut dv[base + j * d + off..base + j * d + off + d_k];
                            for (o, &a) in dvj.iter_mut().zip(dctx_i) {
                                *o += w * a;
                            }
                        }
                    }
                }
                if let Some(m) = drop {
                    dweights.iter_mut().zip(m).for_each(|(x, &s)| *x *= s);
                }
                // Softmax backward, then scores = q k^T * scale.
                for i in 0..t {
                    let p_row = &probs[i * t..(i + 1) * t];
                    let dp_row = &mut dweights[i * t..(i + 1) * t];
                    let mut inner = S::ZERO;
                    for (&p, &dp) in p_row.iter().zip(dp_row.iter()) {
                        inner += p * dp;
                    }
                    for (dp, &p) in dp_row.iter_mut().zip(p_row) {
                        *dp = p * (*dp - inner) * scale;
                    }
                    let qi = base + i * d + off;
                    for (j, &ds) in dp_row.iter().enumerate() {
                        if ds == S::ZERO {
                            continue;
                        }
                        let kj = base + j * d + off;
                        for c in 0..d_k {
                            dq[qi + c] += ds * lt.k[kj + c];
                            dk[kj + c] += ds * lt.q[qi + c];
                        }
                    }
                }
            }
        }
        let mut dattn_in = linear_backward(
            &lt.attn_in,
            layer.wq.data(),
            &dq,
            g.wq.data_mut(),
            g.bq.data_mut(),
            n,
            d,
            d,
        );
        for (x, w, dw, db, dy) in [
            (&lt.attn_in, &layer.wk, &mut g.wk, &mut g.bk, &dk),
            (&lt.attn_in, &layer.wv, &mut g.wv, &mut g.bv, &dv),
        ] {
            let part = linear_backward(x, w.data(), dy, dw.data_mut(), db.data_mut(), n, d, d);
            dattn_in.iter_mut().zip(&part).for_each(|(a, &c)| *a += c);
        }
        let dln1 = layer_norm_backward(
            &dattn_in,
            &lt.ln1,
            layer.ln1_g.data(),
            g.ln1_g.data_mut(),
            g.ln1_b.data_mut(),
            d,
        );
        dh1.iter_mut().zip(&dln1).for_each(|(a, &c)| *a += c);
        dx = dh1;
    }

    for (row, &id) in trace.token_ids.iter().enumerate() {
        let src = &dx[row * d..(row + 1) * d];
        for (o, &v) in grads.tok_emb.row_mut(id as usize).iter_mut().zip(src) {
            *o += v;
        }
        for (o, &v) in grads.pos_emb.row_mut(row % t).iter_mut().zip(src) {
            *o += v;
        }
    }
    Ok(grads)
}
