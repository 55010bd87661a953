use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelConfig, ModelError, Parameters, Tensor};
use crate::Scalar;

/// Fixed sinusoidal position table `[max_len x d_model]`: even columns
/// `sin(pos / 10000^(2i/d))`, odd columns the matching cosine.
pub fn sinusoidal_positions<S: Scalar>(max_len: usize, d_model: usize) -> Tensor<S> {
    let mut t = Tensor::zeros(&[max_len, d_model]);
    for pos in 0..max_len {
        let row = t.row_mut(pos);
        for i in (0..d_model).step_by(2) {
            let angle = pos as f64 / libm::pow(10_000.0, i as f64 / d_model as f64);
            row[i] = S::from_f64(libm::sin(angle));
            if i + 1 < d_model {
                row[i + 1] = S::from_f64(libm::cos(angle));
            }
        }
    }
    t
}

/// Glorot-uniform weights, zero biases, unit layer-norm gains, sinusoidal
/// positions. Tensors are filled in canonical order from one seeded stream.
pub fn init_params<S: Scalar>(
    config: &ModelConfig,
    seed: u64,
) -> Result<Parameters<S>, ModelError> {
    config.validate()?;
    let mut params = Parameters::<S>::zeros(config);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (name, tensor) in params.named_mut() {
        if name == "emb.pos" {
            *tensor = sinusoidal_positions(config.max_len, config.d_model);
        } else if name.ends_with(".g") {
            tensor.fill(S::ONE);
        } else if let [fan_in, fan_out] = *tensor.shape() {
            let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for x in tensor.data_mut() {
                *x = S::from_f64(rng.gen_range(-bound..bound));
            }
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            vocab_size: 12,
            d_model: 8,
            n_heads: 2,
            n_layers: 1,
            d_ff: 16,
            max_len: 6,
            n_labels: 3,
            dropout_rate: 0.1,
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let a = init_params::<f32>(&cfg(), 3).unwrap();
        let b = init_params::<f32>(&cfg(), 3).unwrap();
        let bits = |p: &Parameters<f32>| -> alloc::vec::Vec<u32> {
            p.named()
                .iter()
                .flat_map(|(_, t)| t.data().iter().map(|x| x.to_bits()))
                .collect()
        };
        assert_eq!(bits(&a), bits(&b));
        assert_ne!(a, init_params::<f32>(&cfg(), 4).unwrap());
    }

    #[test]
    fn biases_gains_and_bounds() {
        let p = init_params::<f64>(&cfg(), 1).unwrap();
        for (name, t) in p.named() {
            if t.shape().len() == 1 && !name.ends_with(".g") {
                assert!(t.data().iter().all(|&x| x == 0.0), "{name}");
            }
            if name.ends_with(".g") {
                assert!(t.data().iter().all(|&x| x == 1.0), "{name}");
            }
            if t.shape().len() == 2 && name != "emb.pos" {
                let bound = (6.0 / (t.shape()[0] + t.shape()[1]) as f64).sqrt();
                assert!(t.data().iter().all(|x| x.abs() <= bound), "{name}");
                assert!(t.data().iter().any(|&x| x != 0.0), "{name}");
            }
        }
    }

    #[test]
    fn position_row_zero_alternates() {
        let p = init_params::<f64>(&cfg(), 1).unwrap();
        assert_eq!(p.pos_emb.row(0), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
        assert!((p.pos_emb.row(1)[0] - 1f64.sin()).abs() < 1e-15);
    }
}
