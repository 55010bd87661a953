use alloc::format;

use super::TrainError;
use crate::model::Tensor;
use crate::Scalar;

/// Label value marking positions that carry no loss (padding).
pub const IGNORE_LABEL: i64 = -1;

/// Probabilities are clamped to this floor before the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Mean categorical cross-entropy over non-ignored positions and its
/// gradient with respect to the logits.
///
/// `logits` is `[.. x K]` with one row per entry of `label_ids`. The loss is
/// accumulated in f64; the gradient is `(softmax - onehot) / N` at active
/// positions and exactly zero at ignored ones.
pub fn cross_entropy<S: Scalar>(
    logits: &Tensor<S>,
    label_ids: &[i64],
) -> Result<(f64, Tensor<S>), TrainError> {
    let k = *logits.shape().last().unwrap_or(&0);
    if k == 0 || logits.len() != label_ids.len() * k {
        return Err(TrainError::ShapeMismatch(format!(
            "logits {:?} for {} labels",
            logits.shape(),
            label_ids.len()
        )));
    }
    for (position, &label) in label_ids.iter().enumerate() {
        if label != IGNORE_LABEL && (label < 0 || label as usize >= k) {
            return Err(TrainError::LabelOutOfRange {
                position,
                label,
                n_labels: k,
            });
        }
    }
    let active = label_ids.iter().filter(|&&l| l != IGNORE_LABEL).count();
    if active == 0 {
        return Err(TrainError::NoActivePositions);
    }
    let inv_n = 1.0 / active as f64;
    let log_floor = libm::log(PROB_FLOOR);

    let mut grad = Tensor::zeros(logits.shape());
    let mut loss = 0.0;
    let mut probs = alloc::vec![0.0f64; k];
    for ((row, g), &label) in logits
        .data()
        .chunks_exact(k)
        .zip(grad.data_mut().chunks_exact_mut(k))
        .zip(label_ids)
    {
        if label == IGNORE_LABEL {
            continue;
        }
        let max = row
            .iter()
            .map(|z| z.to_f64())
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (p, z) in probs.iter_mut().zip(row) {
            *p = libm::exp(z.to_f64() - max);
            sum += *p;
        }
        let y = label as usize;
        let log_p = row[y].to_f64() - max - libm::log(sum);
        loss -= log_p.max(log_floor);
        for (j, (gj, p)) in g.iter_mut().zip(&probs).enumerate() {
            let onehot = if j == y { 1.0 } else { 0.0 };
            *gj = S::from_f64((p / sum - onehot) * inv_n);
        }
    }
    Ok((loss * inv_n, grad))
}
