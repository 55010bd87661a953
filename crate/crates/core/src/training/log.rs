use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::fmt::format_sig;

pub const TRAIN_LOG_HEADER: &str = "epoch,train_loss,val_loss,val_span_f1,lr";

/// One epoch of training.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Token-weighted mean loss over the epoch's batches.
    pub train_loss: f64,
    /// `None` when there is no validation split.
    pub val_loss: Option<f64>,
    pub val_span_f1: Option<f64>,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

impl EpochRecord {
    /// The loss that drives scheduling: validation loss when present.
    pub fn monitored_loss(&self) -> f64 {
        self.val_loss.unwrap_or(self.train_loss)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    rows: Vec<EpochRecord>,
}

impl TrainLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: EpochRecord) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[EpochRecord] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV with a header row; reals use 6 significant digits and missing
    /// validation values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        let opt = |x: Option<f64>| x.map(|v| format_sig(v, 6)).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch,
                format_sig(r.train_loss, 6),
                opt(r.val_loss),
                opt(r.val_span_f1),
                format_sig(r.lr, 6)
            );
        }
        out
    }
}
