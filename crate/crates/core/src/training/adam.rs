use alloc::format;
use alloc::string::ToString;

use super::TrainError;
use crate::model::{is_trainable, ModelConfig, Parameters};
use crate::Scalar;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<S> {
    pub m: Parameters<S>,
    pub v: Parameters<S>,
    pub t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(config: &ModelConfig) -> Self {
        AdamState {
            m: Parameters::zeros(config),
            v: Parameters::zeros(config),
            t: 0,
        }
    }
}

/// Global L2 norm over the trainable gradient tensors.
pub fn grad_norm<S: Scalar>(grads: &Parameters<S>) -> f64 {
    grads
        .named()
        .into_iter()
        .filter(|(name, _)| is_trainable(name))
        .map(|(_, g)| g.sum_squares())
        .sum::<f64>()
        .sqrt()
}

/// One bias-corrected Adam update in place. Frozen tensors are left as they
/// are. With `clip_norm`, gradients whose global norm exceeds it are scaled
/// down to that norm first. A non-finite gradient aborts before any change.
pub fn adam_step<S: Scalar>(
    params: &mut Parameters<S>,
    grads: &Parameters<S>,
    state: &mut AdamState<S>,
    lr: f64,
    clip_norm: Option<f64>,
) -> Result<(), TrainError> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(TrainError::InvalidConfig(format!(
            "learning rate must be > 0, got {lr}"
        )));
    }
    {
        let p = params.named();
        let g = grads.named();
        let m = state.m.named();
        if p.len() != g.len() || p.len() != m.len() {
            return Err(TrainError::ShapeMismatch(
                "gradient/parameter tensor count".into(),
            ));
        }
        for (((name, pt), (gname, gt)), (_, mt)) in p.iter().zip(&g).zip(&m) {
            if name != gname || pt.shape() != gt.shape() || pt.shape() != mt.shape() {
                return Err(TrainError::ShapeMismatch(format!(
                    "tensor `{name}`: parameter {:?}, gradient `{gname}` {:?}, moment {:?}",
                    pt.shape(),
                    gt.shape(),
                    mt.shape()
                )));
            }
            if !gt.all_finite() {
                return Err(TrainError::NonFiniteGradient {
                    tensor: name.to_string(),
                });
            }
        }
    }
    let clip_scale = match clip_norm {
        Some(c) => {
            let norm = grad_norm(grads);
            if norm > c {
                c / norm
            } else {
                1.0
            }
        }
        None => 1.0,
    };

    state.t += 1;
    let t = state.t as f64;
    let bc1 = 1.0 - libm::pow(BETA1, t);
    let bc2 = 1.0 - libm::pow(BETA2, t);
    let grads = grads.named();
    let ms = state.m.named_mut();
    let vs = state.v.named_mut();
    for ((((name, p), (_, g)), (_, m)), (_, v)) in
        params.named_mut().into_iter().zip(grads).zip(ms).zip(vs)
    {
        if !is_trainable(&name) {
            continue;
        }
        for (((p, &g), m), v) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut())
            .zip(v.data_mut())
        {
            let g = g.to_f64() * clip_scale;
            let m_new = BETA1 * m.to_f64() + (1.0 - BETA1) * g;
            let v_new = BETA2 * v.to_f64() + (1.0 - BETA2) * g * g;
            *m = S::from_f64(m_new);
            *v = S::from_f64(v_new);
            let step = lr * (m_new / bc1) / (libm::sqrt(v_new / bc2) + EPSILON);
            *p = S::from_f64(p.to_f64() - step);
        }
    }
    Ok(())
}
