//! Cross-entropy training: loss, backpropagation, Adam, reduce-on-plateau
//! learning-rate decay, batching and the epoch loop.

use alloc::string::String;

use thiserror::Error;

use crate::eval::EvalError;
use crate::model::ModelError;

mod adam;
mod backward;
mod batch;
mod log;
mod loss;
mod schedule;
mod trainer;

pub use adam::{adam_step, grad_norm, AdamState, BETA1, BETA2, EPSILON};
pub use backward::backward;
pub use batch::{make_batches, Batch};
pub use log::{EpochRecord, TrainLog, TRAIN_LOG_HEADER};
pub use loss::{cross_entropy, IGNORE_LABEL, PROB_FLOOR};
pub use schedule::{lr_schedule, DecayConfig, PlateauTracker, MIN_IMPROVEMENT};
pub use trainer::{train, TrainConfig, TrainData, TrainFailure, TrainOutcome, TrainWarning};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("every position is ignored; nothing to average the loss over")]
    NoActivePositions,
    #[error("label {label} at position {position} is outside [0, {n_labels})")]
    LabelOutOfRange {
        position: usize,
        label: i64,
        n_labels: usize,
    },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient in tensor `{tensor}`")]
    NonFiniteGradient { tensor: String },
    #[error("training diverged: non-finite loss in epoch {epoch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("training split is empty")]
    EmptyTrainingSet,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl TrainError {
    /// Numerical failure (divergence) rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            TrainError::NonFiniteGradient { .. } | TrainError::NonFiniteLoss { .. }
        )
    }
}
