//! Numerical kernels shared by the forward and backward passes.
//!
//! Matrices are row-major slices. Loop orders are fixed, so results are
//! bit-reproducible for a given input.

use alloc::vec;
use alloc::vec::Vec;

use super::{ModelError, Tensor};
use crate::Scalar;

pub const LAYER_NORM_EPS: f64 = 1e-5;

/// `out += a[m x k] * b[k x n]`
pub fn matmul_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let out_row = &mut out[i * n..(i + 1) * n];
        for (p, &a_ip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if a_ip == S::ZERO {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (o, &b_pj) in out_row.iter_mut().zip(b_row) {
                *o += a_ip * b_pj;
            }
        }
    }
}

/// `a[m x k] * b[k x n]`, plus an optional bias broadcast over rows.
pub fn linear<S: Scalar>(
    a: &[S],
    w: &[S],
    bias: Option<&[S]>,
    m: usize,
    k: usize,
    n: usize,
) -> Vec<S> {
    let mut out = vec![S::ZERO; m * n];
    if let Some(bias) = bias {
        for row in out.chunks_exact_mut(n) {
            row.copy_from_slice(bias);
        }
    }
    matmul_acc(a, w, &mut out, m, k, n);
    out
}

/// `out += a[m x k]^T * b[m x n]`, giving `[k x n]`.
pub fn matmul_at_b_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for i in 0..m {
        let b_row = &b[i * n..(i + 1) * n];
        for (p, &a_ip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if a_ip == S::ZERO {
                continue;
            }
            let out_row = &mut out[p * n..(p + 1) * n];
            for (o, &b_ij) in out_row.iter_mut().zip(b_row) {
                *o += a_ip * b_ij;
            }
        }
    }
}

pub fn transpose<S: Scalar>(a: &[S], rows: usize, cols: usize) -> Vec<S> {
    let mut out = vec![S::ZERO; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = a[i * cols + j];
        }
    }
    out
}

/// `a[m x k] * b[n x k]^T`, giving `[m x n]`.
pub fn matmul_a_bt<S: Scalar>(a: &[S], b: &[S], m: usize, k: usize, n: usize) -> Vec<S> {
    let bt = transpose(b, n, k);
    let mut out = vec![S::ZERO; m * n];
    matmul_acc(a, &bt, &mut out, m, k, n);
    out
}

/// Column sums of `g[m x n]` added into `out[n]`.
pub fn add_column_sums<S: Scalar>(g: &[S], out: &mut [S], n: usize) {
    for row in g.chunks_exact(n) {
        for (o, &x) in out.iter_mut().zip(row) {
            *o += x;
        }
    }
}

/// In-place stable softmax over the entries where `keep` is true; the
/// others are set to exactly zero. At least one entry must be kept.
pub(crate) fn masked_softmax_in_place<S: Scalar>(row: &mut [S], keep: impl Fn(usize) -> bool) {
    let mut max = None::<S>;
    for (j, &x) in row.iter().enumerate() {
        if keep(j) {
            max = Some(match max {
                Some(m) => m.max(x),
                None => x,
            });
        }
    }
    let max = max.expect("masked softmax needs one unmasked entry");
    let mut sum = S::ZERO;
    for (j, x) in row.iter_mut().enumerate() {
        if keep(j) {
            *x = (*x - max).exp();
            sum += *x;
        } else {
            *x = S::ZERO;
        }
    }
    for x in row.iter_mut() {
        *x /= sum;
    }
}

pub fn softmax_in_place<S: Scalar>(row: &mut [S]) {
    masked_softmax_in_place(row, |_| true);
}

/// Normalized exponentials of `z`, computed after subtracting `max(z)`.
pub fn softmax<S: Scalar>(z: &[S]) -> Result<Vec<S>, ModelError> {
    if z.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let mut out = z.to_vec();
    softmax_in_place(&mut out);
    Ok(out)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<S: Scalar>(row: &[S]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

/// Per-row normalization statistics kept for the backward pass.
#[derive(Debug, Clone)]
pub struct NormCache<S> {
    pub xhat: Vec<S>,
    pub inv_std: Vec<S>,
}

/// Layer norm over rows of width `d`. A constant row has zero variance and
/// maps to the bias vector.
pub fn layer_norm<S: Scalar>(x: &[S], gain: &[S], bias: &[S], d: usize) -> (Vec<S>, NormCache<S>) {
    let rows = x.len() / d;
    let inv_d = S::from_f64(1.0 / d as f64);
    let eps = S::from_f64(LAYER_NORM_EPS);
    let mut out = vec![S::ZERO; x.len()];
    let mut xhat = vec![S::ZERO; x.len()];
    let mut inv_std = vec![S::ZERO; rows];
    for r in 0..rows {
        let row = &x[r * d..(r + 1) * d];
        let mut mean = S::ZERO;
        for &v in row {
            mean += v;
        }
        mean *= inv_d;
        let mut var = S::ZERO;
        for &v in row {
            let c = v - mean;
            var += c * c;
        }
        var *= inv_d;
        let is = S::ONE / (var + eps).sqrt();
        inv_std[r] = is;
        for j in 0..d {
            let h = (row[j] - mean) * is;
            xhat[r * d + j] = h;
            out[r * d + j] = gain[j] * h + bias[j];
        }
    }
    (out, NormCache { xhat, inv_std })
}

const GELU_COEF: f64 = 0.044_715;
// sqrt(2 / pi)
const GELU_SCALE: f64 = 0.797_884_560_802_865_4;

/// Tanh approximation of GELU.
pub fn gelu<S: Scalar>(x: S) -> S {
    let c = S::from_f64(GELU_SCALE);
    let a = S::from_f64(GELU_COEF);
    let half = S::from_f64(0.5);
    half * x * (S::ONE + (c * (x + a * x * x * x)).tanh())
}

pub fn gelu_grad<S: Scalar>(x: S) -> S {
    let c = S::from_f64(GELU_SCALE);
    let a = S::from_f64(GELU_COEF);
    let half = S::from_f64(0.5);
    let three = S::from_f64(3.0);
    let th = (c * (x + a * x * x * x)).tanh();
    half * (S::ONE + th) + half * x * (S::ONE - th * th) * c * (S::ONE + three * a * x * x)
}

/// Geometry of one attention head inside `[rows x stride]` Q/K/V buffers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct HeadView {
    pub seq_len: usize,
    pub stride: usize,
    pub offset: usize,
    pub d_k: usize,
}

/// Attention weights for one head of one record: row-wise masked softmax
/// of `Q K^T / sqrt(d_k)` written into `probs` (`[seq_len x seq_len]`).
pub(crate) fn attention_weights<S: Scalar>(
    view: HeadView,
    q: &[S],
    k: &[S],
    mask: &[bool],
    probs: &mut [S],
) {
    let HeadView {
        seq_len: t,
        stride,
        offset,
        d_k,
    } = view;
    let scale = S::ONE / S::from_f64(d_k as f64).sqrt();
    for i in 0..t {
        let qi = &q[i * stride + offset..i * stride + offset + d_k];
        let row = &mut probs[i * t..(i + 1) * t];
        for (j, s) in row.iter_mut().enumerate() {
            if !mask[j] {
                *s = S::ZERO;
                continue;
            }
            let kj = &k[j * stride + offset..j * stride + offset + d_k];
            let mut dot = S::ZERO;
            for (&a, &b) in qi.iter().zip(kj) {
                dot += a * b;
            }
            *s = dot * scale;
        }
        masked_softmax_in_place(row, |j| mask[j]);
    }
}

/// `ctx[:, head] = weights * V[:, head]` for one head of one record.
pub(crate) fn apply_weights<S: Scalar>(view: HeadView, weights: &[S], v: &[S], ctx: &mut [S]) {
    let HeadView {
        seq_len: t,
        stride,
        offset,
        d_k,
    } = view;
    for i in 0..t {
        let out = &mut ctx[i * stride + offset..i * stride + offset + d_k];
        out.iter_mut().for_each(|x| *x = S::ZERO);
        for j in 0..t {
            let w = weights[i * t + j];
            if w == S::ZERO {
                continue;
            }
            let vj = &v[j * stride + offset..j * stride + offset + d_k];
            for (o, &x) in out.iter_mut().zip(vj) {
                *o += w * x;
            }
        }
    }
}

/// Single-head attention `rowsoftmax(Q K^T / sqrt(d_k) + maskbias) V`.
///
/// `q`, `k`: `[n x d_k]`; `v`: `[n x d_v]`; `mask[j]` false excludes key
/// `j`. Returns the output `[n x d_v]` and the weights `[n x n]`.
pub fn attention<S: Scalar>(
    q: &Tensor<S>,
    k: &Tensor<S>,
    v: &Tensor<S>,
    mask: &[bool],
) -> Result<(Tensor<S>, Tensor<S>), ModelError> {
    let (n, d_k) = matrix_dims(q)?;
    let (nk, dk2) = matrix_dims(k)?;
    let (nv, d_v) = matrix_dims(v)?;
    if nk != n || nv != n || dk2 != d_k || mask.len() != n {
        return Err(ModelError::ShapeMismatch(alloc::format!(
            "attention: q {:?}, k {:?}, v {:?}, mask {}",
            q.shape(),
            k.shape(),
            v.shape(),
            mask.len()
        )));
    }
    if n == 0 || !mask.iter().any(|&m| m) {
        return Err(ModelError::AllMasked);
    }
    let mut probs = vec![S::ZERO; n * n];
    let view = HeadView {
        seq_len: n,
        stride: d_k,
        offset: 0,
        d_k,
    };
    attention_weights(view, q.data(), k.data(), mask, &mut probs);
    let mut out = vec![S::ZERO; n * d_v];
    matmul_acc(&probs, v.data(), &mut out, n, n, d_v);
    Ok((
        Tensor::from_vec(&[n, d_v], out)?,
        Tensor::from_vec(&[n, n], probs)?,
    ))
}

fn matrix_dims<S: Scalar>(t: &Tensor<S>) -> Result<(usize, usize), ModelError> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        other => Err(ModelError::ShapeMismatch(alloc::format!(
            "expected a matrix, got shape {other:?}"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn softmax_examples() {
        let third = 1.0 / 3.0;
        assert!(close(
            &softmax(&[0.0, 0.0, 0.0]).unwrap(),
            &[third; 3],
            1e-12
        ));
        assert!(close(&softmax(&[5.0, 5.0]).unwrap(), &[0.5, 0.5], 1e-12));
        // exp(k) / (e + e^2 + e^3), evaluated independently with mpmath
        assert!(close(
            &softmax(&[1.0, 2.0, 3.0]).unwrap(),
            &[
                0.090_030_573_170_380_46,
                0.244_728_471_054_797_64,
                0.665_240_955_774_821_9
            ],
            1e-12
        ));
        assert_eq!(softmax::<f64>(&[]).unwrap_err(), ModelError::EmptyInput);
        let big = softmax(&[1000.0f64, 0.0]).unwrap();
        assert!(big[0] == 1.0 && big[1] >= 0.0);
    }

    #[test]
    fn argmax_ties_to_lowest() {
        assert_eq!(argmax(&[0.1, 2.0, -1.0]), 1);
        assert_eq!(argmax(&[1.0, 1.0, 0.0]), 0);
    }

    #[test]
    fn attention_identity_example() {
        // scores = I / sqrt(2); softmax([1/sqrt2, 0]) = [0.66976155, 0.33023845]
        let eye = Tensor::from_vec(&[2, 2], vec![1.0f64, 0.0, 0.0, 1.0]).unwrap();
        let (out, w) = attention(&eye, &eye, &eye, &[true, true]).unwrap();
        let expected = [0.669_761_549_326_656_9, 0.330_238_450_673_343_1];
        assert!(close(out.row(0), &expected, 1e-12));
        assert!(close(out.row(1), &[expected[1], expected[0]], 1e-12));
        assert_eq!(out.data(), w.data());
    }

    #[test]
    fn attention_singleton_and_uniform() {
        let q = Tensor::from_vec(&[1, 2], vec![0.3f64, -1.0]).unwrap();
        let v = Tensor::from_vec(&[1, 3], vec![4.0, 5.0, 6.0]).unwrap();
        let (out, w) = attention(&q, &q, &v, &[true]).unwrap();
        assert_eq!(out.data(), v.data());
        assert_eq!(w.data(), &[1.0]);

        let q = Tensor::from_vec(&[3, 2], vec![1.0, 2.0, -3.0, 0.5, 0.0, 1.0]).unwrap();
        let k = Tensor::from_vec(&[3, 2], vec![0.7, 0.2, 0.7, 0.2, 0.7, 0.2]).unwrap();
        let v = Tensor::from_vec(&[3, 1], vec![1.0, 2.0, 9.0]).unwrap();
        let (out, w) = attention(&q, &k, &v, &[true, true, false]).unwrap();
        for i in 0..3 {
            assert!((out.row(i)[0] - 1.5).abs() < 1e-12);
            assert_eq!(w.row(i)[2], 0.0);
        }
        assert_eq!(
            attention(&q, &k, &v, &[false; 3]).unwrap_err(),
            ModelError::AllMasked
        );
    }

    #[test]
    fn layer_norm_of_constant_row_is_bias() {
        let (y, _) = layer_norm(&[3.0f64; 4], &[2.0; 4], &[0.1, 0.2, 0.3, 0.4], 4);
        assert_eq!(y, [0.1, 0.2, 0.3, 0.4]);
    }

    #[test]
    fn gelu_derivative_matches_difference_quotient() {
        for &x in &[-3.0f64, -0.5, 0.0, 0.2, 1.7] {
            let h = 1e-6;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn kernels_agree_with_naive_products() {
        let a: Vec<f64> = (0..6).map(|i| i as f64 - 2.5).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|i| (i as f64) * 0.5).collect(); // 3x4
        let mut out = vec![0.0; 8];
        matmul_acc(&a, &b, &mut out, 2, 3, 4);
        for i in 0..2 {
            for j in 0..4 {
                let naive: f64 = (0..3).map(|p| a[i * 3 + p] * b[p * 4 + j]).sum();
                assert_eq!(out[i * 4 + j], naive);
            }
        }
        let bt = transpose(&b, 3, 4);
        assert_eq!(matmul_a_bt(&a, &bt, 2, 3, 4), out);
        let mut atb = vec![0.0; 12];
        let c: Vec<f64> = (0..8).map(|i| i as f64).collect(); // 2x4
        matmul_at_b_acc(&a, &c, &mut atb, 2, 3, 4);
        for p in 0..3 {
            for j in 0..4 {
                let naive: f64 = (0..2).map(|i| a[i * 3 + p] * c[i * 4 + j]).sum();
                assert_eq!(atb[p * 4 + j], naive);
            }
        }
    }
}
