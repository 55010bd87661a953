use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{
    adam_step, backward, cross_entropy, make_batches, AdamState, DecayConfig, EpochRecord,
    PlateauTracker, TrainError, TrainLog,
};
use crate::corpus::{EncodedRecord, LabelSet, TagLabel};
use crate::eval::span_metrics;
use crate::model::{forward, init_params, predict_labels, ForwardMode, ModelConfig, Parameters};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub decay: DecayConfig,
    pub seed: u64,
    pub grad_clip_norm: Option<f64>,
    /// Stop after this many epochs without a new best model.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-5,
            batch_size: 16,
            max_epochs: 20,
            decay: DecayConfig::default(),
            seed: 0,
            grad_clip_norm: None,
            early_stop_patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |msg: alloc::string::String| Err(TrainError::InvalidConfig(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be > 0, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        let d = &self.decay;
        if !(d.factor > 0.0 && d.factor < 1.0) {
            return bad(format!("decay factor must be in (0, 1), got {}", d.factor));
        }
        if d.patience == 0 {
            return bad("decay patience must be >= 1".into());
        }
        if !(d.min_lr >= 0.0 && d.min_lr.is_finite()) {
            return bad(format!("min_lr must be >= 0, got {}", d.min_lr));
        }
        if let Some(c) = self.grad_clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("grad_clip_norm must be > 0, got {c}"));
            }
        }
        if self.early_stop_patience == Some(0) {
            return bad("early_stop_patience must be >= 1".into());
        }
        Ok(())
    }
}

/// Encoded splits plus the label inventory they use.
#[derive(Debug, Clone, Copy)]
pub struct TrainData<'a> {
    pub train: &'a [EncodedRecord],
    /// May be empty; scheduling and model selection then use training loss.
    pub val: &'a [EncodedRecord],
    pub labels: &'a LabelSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainWarning {
    EmptyValidation,
}

impl fmt::Display for TrainWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainWarning::EmptyValidation => f.write_str(
                "validation split is empty; learning-rate decay and best-model selection use training loss",
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome<S> {
    pub final_params: Parameters<S>,
    pub best_params: Parameters<S>,
    pub best_epoch: usize,
    pub log: TrainLog,
    pub warnings: Vec<TrainWarning>,
}

/// A failed run. After divergence, `partial` holds the parameters from the
/// end of the last completed epoch (or the initial ones) and the log so far.
#[derive(Debug, Error)]
#[error("{error}")]
pub struct TrainFailure<S: fmt::Debug> {
    pub error: TrainError,
    pub partial: Option<Box<TrainOutcome<S>>>,
}

impl<S: fmt::Debug> From<TrainError> for TrainFailure<S> {
    fn from(error: TrainError) -> Self {
        TrainFailure {
            error,
            partial: None,
        }
    }
}

struct ValScores {
    loss: f64,
    span_f1: f64,
}

fn validate_split<S: Scalar>(
    params: &Parameters<S>,
    config: &ModelConfig,
    records: &[EncodedRecord],
    labels: &LabelSet,
    batch_size: usize,
) -> Result<ValScores, TrainError> {
    let mut loss_sum = 0.0;
    let mut tokens = 0usize;
    let mut pred = alloc::vec![Vec::new(); records.len()];
    for batch in make_batches(records, batch_size, 0, false) {
        let (logits, _) = forward(params, config, batch.inputs(), ForwardMode::Eval)?;
        let (loss, _) = cross_entropy(&logits, &batch.label_ids)?;
        loss_sum += loss * batch.active_count as f64;
        tokens += batch.active_count;
        let ids = predict_labels(&logits);
        for (slot, &r) in batch.indices.iter().enumerate() {
            let start = slot * batch.seq_len;
            pred[r] = labels.decode(&ids[start..start + records[r].len()]);
        }
    }
    let gold: Vec<Vec<TagLabel>> = records
        .iter()
        .map(|r| labels.decode(&r.label_ids))
        .collect();
    let spans = span_metrics(&pred, &gold)?;
    Ok(ValScores {
        loss: loss_sum / tokens as f64,
        span_f1: spans.micro.prf().f1,
    })
}

fn check_records(records: &[EncodedRecord], n_labels: usize) -> Result<(), TrainError> {
    for r in records {
        if r.token_ids.len() != r.label_ids.len() || r.is_empty() {
            return Err(TrainError::ShapeMismatch(format!(
                "record {}: {} tokens, {} labels",
                r.record_id,
                r.token_ids.len(),
                r.label_ids.len()
            )));
        }
        if let Some(position) = r.label_ids.iter().position(|&l| l as usize >= n_labels) {
            return Err(TrainError::LabelOutOfRange {
                position,
                label: i64::from(r.label_ids[position]),
                n_labels,
            });
        }
    }
    Ok(())
}

/// Trains a freshly initialized model.
///
/// Each epoch shuffles the training records, then runs forward, loss,
/// backward and an Adam step per batch; scores the validation split; logs
/// a row (passed to `observer`); and updates the learning rate. The best
/// model has the highest validation span F1, earliest epoch on ties. The
/// whole run is a deterministic function of its inputs.
pub fn train<S: Scalar>(
    data: TrainData<'_>,
    model: &ModelConfig,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<S>, TrainFailure<S>> {
    cfg.validate()?;
    model.validate().map_err(TrainError::from)?;
    if data.train.is_empty() {
        return Err(TrainError::EmptyTrainingSet.into());
    }
    if data.labels.len() != model.n_labels {
        return Err(TrainError::InvalidConfig(format!(
            "{} labels in the inventory but n_labels = {}",
            data.labels.len(),
            model.n_labels
        ))
        .into());
    }
    check_records(data.train, model.n_labels)?;
    check_records(data.val, model.n_labels)?;

    let mut warnings = Vec::new();
    if data.val.is_empty() {
        warnings.push(TrainWarning::EmptyValidation);
    }

    let mut params: Parameters<S> = init_params(model, cfg.seed).map_err(TrainError::from)?;
    let mut adam = AdamState::new(model);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    dropout_rng.set_stream(2);

    let mut log = TrainLog::new();
    let mut tracker = PlateauTracker::new();
    let mut lr = cfg.learning_rate;
    let mut best_params = params.clone();
    let mut best_epoch = 0;
    let mut best_score = f64::NEG_INFINITY;

    for epoch in 1..=cfg.max_epochs {
        let epoch_start = params.clone();
        let result: Result<EpochRecord, TrainError> = (|| {
            let mut loss_sum = 0.0;
            let mut tokens = 0usize;
            let batches = make_batches(data.train, cfg.batch_size, shuffle_rng.gen(), true);
            for (b, batch) in batches.iter().enumerate() {
                let (logits, trace) = forward(
                    &params,
                    model,
                    batch.inputs(),
                    ForwardMode::Train(&mut dropout_rng),
                )?;
                let (loss, dlogits) = cross_entropy(&logits, &batch.label_ids)?;
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss {
                        epoch,
                        batch: b + 1,
                    });
                }
                let grads = backward(&params, model, &trace, &dlogits)?;
                adam_step(&mut params, &grads, &mut adam, lr, cfg.grad_clip_norm)?;
                loss_sum += loss * batch.active_count as f64;
                tokens += batch.active_count;
            }
            let train_loss = loss_sum / tokens as f64;
            let val = if data.val.is_empty() {
                None
            } else {
                let v = validate_split(&params, model, data.val, data.labels, cfg.batch_size)?;
                if !v.loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss { epoch, batch: 0 });
                }
                Some(v)
            };
            if !train_loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch, batch: 0 });
            }
            Ok(EpochRecord {
                epoch,
                train_loss,
                val_loss: val.as_ref().map(|v| v.loss),
                val_span_f1: val.as_ref().map(|v| v.span_f1),
                lr,
            })
        })();

        let row = match result {
            Ok(row) => row,
            Err(error) => {
                let diverged = matches!(
                    error,
                    TrainError::NonFiniteLoss { .. } | TrainError::NonFiniteGradient { .. }
                );
                let partial = diverged.then(|| {
                    Box::new(TrainOutcome {
                        final_params: epoch_start,
                        best_params: best_params.clone(),
                        best_epoch,
                        log: log.clone(),
                        warnings: warnings.clone(),
                    })
                });
                return Err(TrainFailure { error, partial });
            }
        };

        let score = match row.val_span_f1 {
            Some(f1) => f1,
            None => -row.train_loss,
        };
        if score > best_score {
            best_score = score;
            best_epoch = epoch;
            best_params = params.clone();
        }
        observer(&row);
        lr = tracker.observe(row.monitored_loss(), lr, &cfg.decay);
        log.push(row);

        if let Some(patience) = cfg.early_stop_patience {
            if epoch - best_epoch >= patience {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        final_params: params,
        best_params,
        best_epoch,
        log,
        warnings,
    })
}
