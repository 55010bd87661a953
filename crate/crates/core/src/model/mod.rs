//! Transformer encoder token classifier: parameters, initialization,
//! forward pass and checkpoint serialization.

use alloc::string::String;

use thiserror::Error;

mod checkpoint;
mod config;
mod forward;
mod init;
pub mod ops;
mod params;
mod tensor;

pub use checkpoint::{
    decode_checkpoint, decode_checkpoint_as, encode_checkpoint, AnyCheckpoint, Checkpoint,
    CheckpointError, FORMAT_VERSION,
};
pub use config::ModelConfig;
pub use forward::{forward, predict_labels, ForwardMode, ForwardTrace, Inputs, LayerTrace};
pub use init::{init_params, sinusoidal_positions};
pub use ops::{attention, softmax};
pub use params::{is_trainable, param_specs, EncoderLayer, Parameters, FROZEN};
pub use tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("empty input")]
    EmptyInput,
    #[error("every position is masked")]
    AllMasked,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },
    #[error("sequence length {len} exceeds max_len {max_len}")]
    SequenceTooLong { len: usize, max_len: usize },
}
