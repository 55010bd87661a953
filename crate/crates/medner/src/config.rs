//! Run configuration file (TOML).
//!
//! ```toml
//! [run]
//! seed = 42
//! out_dir = "runs/quickstart"
//! precision = 32
//!
//! [data]
//! raw = "notes.conll"          # or a [data.synthetic] table
//! prepared_dir = "prepared"
//! repair = false
//! min_freq = 1
//! max_vocab = 50000
//!
//! [split]
//! train = 0.70
//! val = 0.15
//! test = 0.15
//!
//! [model]
//! d_model = 64
//! n_heads = 4
//! n_layers = 2
//! d_ff = 128
//! max_len = 128
//! dropout = 0.1
//!
//! [train]
//! learning_rate = 2e-5
//! batch_size = 16
//! max_epochs = 20
//! decay_factor = 0.5
//! decay_patience = 3
//! min_lr = 1e-7
//! # grad_clip_norm = 1.0
//! # early_stop_patience = 5
//! ```
//!
//! Every key is optional. Relative paths are resolved against the directory
//! holding the config file.

use std::path::{Path, PathBuf};

use medner_core::corpus::SplitSpec;
use medner_core::model::ModelConfig;
use medner_core::training::{DecayConfig, TrainConfig};
use medner_core::Precision;
use serde::Deserialize;

use crate::files::read_text;
use crate::CliError;

pub const SEED_ENV: &str = "MEDNER_SEED";

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub data: DataSection,
    pub split: SplitSection,
    pub model: ModelSection,
    pub train: TrainSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub precision: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    pub raw: Option<PathBuf>,
    pub prepared_dir: Option<PathBuf>,
    pub repair: bool,
    pub min_freq: usize,
    pub max_vocab: usize,
    pub synthetic: Option<SyntheticSection>,
}

impl Default for DataSection {
    fn default() -> Self {
        DataSection {
            raw: None,
            prepared_dir: None,
            repair: false,
            min_freq: 1,
            max_vocab: 50_000,
            synthetic: None,
        }
    }
}

/// Generate the raw corpus instead of reading one.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub n_records: usize,
    pub entity_types: Vec<String>,
    pub vocab_size: usize,
    pub max_len: usize,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        SyntheticSection {
            n_records: 2000,
            entity_types: ["Disease", "Drug", "Symptom"].map(String::from).to_vec(),
            vocab_size: 500,
            max_len: 24,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        let s = SplitSpec::default();
        SplitSection {
            train: s.train_frac,
            val: s.val_frac,
            test: s.test_frac,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    pub max_len: usize,
    pub dropout: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::default();
        ModelSection {
            d_model: m.d_model,
            n_heads: m.n_heads,
            n_layers: m.n_layers,
            d_ff: m.d_ff,
            max_len: m.max_len,
            dropout: m.dropout_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub decay_factor: f64,
    pub decay_patience: usize,
    pub min_lr: f64,
    pub grad_clip_norm: Option<f64>,
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            decay_factor: t.decay.factor,
            decay_patience: t.decay.patience,
            min_lr: t.decay.min_lr,
            grad_clip_norm: t.grad_clip_norm,
            early_stop_patience: t.early_stop_patience,
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let mut cfg = Self::parse(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.run.out_dir,
            &mut cfg.data.raw,
            &mut cfg.data.prepared_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn prepared_dir(&self) -> PathBuf {
        self.data
            .prepared_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("prepared"))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.run
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn split_spec(&self, seed: u64) -> SplitSpec {
        SplitSpec {
            train_frac: self.split.train,
            val_frac: self.split.val,
            test_frac: self.split.test,
            seed,
        }
    }

    pub fn model_config(&self, vocab_size: usize, n_labels: usize) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            vocab_size,
            d_model: m.d_model,
            n_heads: m.n_heads,
            n_layers: m.n_layers,
            d_ff: m.d_ff,
            max_len: m.max_len,
            n_labels,
            dropout_rate: m.dropout,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.train;
        TrainConfig {
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            decay: DecayConfig {
                factor: t.decay_factor,
                patience: t.decay_patience,
                min_lr: t.min_lr,
            },
            seed,
            grad_clip_norm: t.grad_clip_norm,
            early_stop_patience: t.early_stop_patience,
        }
    }

    /// Seed precedence: flag, then config file, then `MEDNER_SEED`, then 0.
    pub fn resolve_seed(&self, flag: Option<u64>) -> Result<u64, CliError> {
        if let Some(s) = flag.or(self.run.seed) {
            return Ok(s);
        }
        env_seed()
    }

    /// Precision precedence: flag, then config file, then 32-bit.
    pub fn resolve_precision(&self, flag: Option<u32>) -> Result<Precision, CliError> {
        match flag.or(self.run.precision).unwrap_or(32) {
            32 => Ok(Precision::F32),
            64 => Ok(Precision::F64),
            other => Err(CliError::Usage(format!(
                "precision must be 32 or 64, got {other}"
            ))),
        }
    }
}

/// `MEDNER_SEED` if set, else 0.
pub fn env_seed() -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(
            cfg.train_config(5),
            TrainConfig {
                seed: 5,
                ..TrainConfig::default()
            }
        );
        assert_eq!(cfg.split_spec(0), SplitSpec::default());
        assert_eq!(
            cfg.model_config(10, 3),
            ModelConfig {
                vocab_size: 10,
                n_labels: 3,
                ..ModelConfig::default()
            }
        );
    }

    #[test]
    fn sections_and_unknown_keys() {
        let cfg = RunConfig::parse(
            "[run]\nseed = 9\n[model]\nd_model = 32\n[train]\ngrad_clip_norm = 1.0\n[data.synthetic]\nn_records = 10\n",
        )
        .unwrap();
        assert_eq!(cfg.resolve_seed(None).unwrap(), 9);
        assert_eq!(cfg.resolve_seed(Some(4)).unwrap(), 4);
        assert_eq!(cfg.model.d_model, 32);
        assert_eq!(cfg.train.grad_clip_norm, Some(1.0));
        assert_eq!(cfg.data.synthetic.unwrap().n_records, 10);
        assert!(RunConfig::parse("[model]\nwidth = 3\n").is_err());
        assert!(RunConfig::parse("[modle]\n").is_err());
    }

    #[test]
    fn precision_values() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.resolve_precision(None).unwrap(), Precision::F32);
        assert_eq!(cfg.resolve_precision(Some(64)).unwrap(), Precision::F64);
        assert_eq!(cfg.resolve_precision(Some(16)).unwrap_err().exit_code(), 2);
    }
}
