use super::TrainLog;

/// An epoch improves on the best monitored value only by more than this.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

/// Reduce-on-plateau settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

impl Default for DecayConfig {
    fn default() -> Self {
        DecayConfig {
            factor: 0.5,
            patience: 3,
            min_lr: 1e-7,
        }
    }
}

/// Counts non-improving epochs of a monitored loss.
///
/// The first observation sets the reference and counts as non-improving;
/// after `patience` such epochs the learning rate is reduced and the count
/// starts again.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlateauTracker {
    best: Option<f64>,
    bad_epochs: usize,
}

impl PlateauTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one epoch's monitored value; true when it triggers a
    /// reduction.
    pub fn step(&mut self, value: f64, patience: usize) -> bool {
        match self.best {
            Some(best) if value < best - MIN_IMPROVEMENT => {
                self.best = Some(value);
                self.bad_epochs = 0;
            }
            Some(_) => self.bad_epochs += 1,
            None => {
                self.best = Some(value);
                self.bad_epochs = 1;
            }
        }
        if self.bad_epochs >= patience.max(1) {
            self.bad_epochs = 0;
            true
        } else {
            false
        }
    }

    /// Records one epoch and returns the learning rate for the next one.
    pub fn observe(&mut self, value: f64, lr: f64, decay: &DecayConfig) -> f64 {
        if self.step(value, decay.patience) {
            reduce(lr, decay)
        } else {
            lr
        }
    }
}

fn reduce(lr: f64, decay: &DecayConfig) -> f64 {
    (lr * decay.factor).max(decay.min_lr)
}

/// Learning rate after the last epoch of `history`, replaying the plateau
/// rule over its monitored losses (validation loss, or training loss when
/// there is no validation split).
pub fn lr_schedule(history: &TrainLog, current_lr: f64, decay: &DecayConfig) -> f64 {
    let mut tracker = PlateauTracker::new();
    let mut reduce_now = false;
    for row in history.rows() {
        reduce_now = tracker.step(row.monitored_loss(), decay.patience);
    }
    if reduce_now {
        reduce(current_lr, decay)
    } else {
        current_lr
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::EpochRecord;
    use alloc::vec::Vec;

    fn lrs(val_losses: &[f64], lr0: f64, decay: &DecayConfig) -> Vec<f64> {
        let mut log = TrainLog::new();
        let mut lr = lr0;
        let mut out = Vec::new();
        for (i, &v) in val_losses.iter().enumerate() {
            log.push(EpochRecord {
                epoch: i + 1,
                train_loss: 0.0,
                val_loss: Some(v),
                val_span_f1: Some(0.0),
                lr,
            });
            lr = lr_schedule(&log, lr, decay);
            out.push(lr);
        }
        out
    }

    #[test]
    fn improving_keeps_lr() {
        assert_eq!(
            lrs(&[1.0, 0.9, 0.8], 1.0, &DecayConfig::default()),
            [1.0; 3]
        );
    }

    #[test]
    fn flat_series_halves_every_patience_epochs() {
        let got = lrs(&[1.0; 6], 1.0, &DecayConfig::default());
        assert_eq!(got, [1.0, 1.0, 0.5, 0.5, 0.5, 0.25]);
        let got = lrs(&[1.0; 4], 1.0, &DecayConfig::default());
        assert_eq!(got[3], 0.5);
    }

    #[test]
    fn floor_at_min_lr() {
        let decay = DecayConfig {
            factor: 0.5,
            patience: 1,
            min_lr: 0.3,
        };
        assert_eq!(lrs(&[1.0; 4], 1.0, &decay), [0.5, 0.3, 0.3, 0.3]);
    }

    #[test]
    fn tiny_improvements_do_not_count() {
        let got = lrs(&[1.0, 1.0 - 5e-7, 1.0 - 9e-7], 1.0, &DecayConfig::default());
        assert_eq!(got, [1.0, 1.0, 0.5]);
    }

    #[test]
    fn tracker_and_replay_agree() {
        let series = [3.0, 2.0, 2.5, 2.4, 2.6, 1.0, 1.2, 1.1, 1.3, 1.3];
        let decay = DecayConfig::default();
        let mut tracker = PlateauTracker::new();
        let mut lr = 0.1;
        let incremental: Vec<f64> = series
            .iter()
            .map(|&v| {
                lr = tracker.observe(v, lr, &decay);
                lr
            })
            .collect();
        assert_eq!(incremental, lrs(&series, 0.1, &decay));
    }
}
