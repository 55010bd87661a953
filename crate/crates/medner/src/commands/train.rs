use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use medner_core::corpus::{encode, Corpus, EncodedRecord, LabelSet, Vocabulary};
use medner_core::fmt::format_sig;
use medner_core::model::{Checkpoint, ModelConfig};
use medner_core::training::{train, EpochRecord, TrainConfig, TrainData, TrainError, TrainOutcome};
use medner_core::{Precision, Scalar};

use crate::config::RunConfig;
use crate::files::{self, read_corpus, read_vocab, save_checkpoint, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; defaults to `run.out_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Floating-point width of parameters and arithmetic: 32 or 64.
    #[arg(long)]
    pub precision: Option<u32>,
}

/// Prepared splits, ready for training.
pub struct Prepared {
    pub vocab: Vocabulary,
    pub labels: LabelSet,
    pub train: Vec<EncodedRecord>,
    pub val: Vec<EncodedRecord>,
}

/// Loads the output of `prepare`. The label inventory covers every prepared
/// split so a checkpoint can score the test split.
pub fn load_prepared(dir: &Path) -> Result<Prepared, CliError> {
    let vocab = read_vocab(&dir.join(files::VOCAB_FILE))?;
    let train = read_corpus(&dir.join(files::TRAIN_FILE))?;
    let val = read_optional_corpus(&dir.join(files::VAL_FILE))?;
    let test = read_optional_corpus(&dir.join(files::TEST_FILE))?;
    let types: BTreeSet<&str> = [&train, &val, &test]
        .iter()
        .flat_map(|c| c.label_inventory().iter().map(String::as_str))
        .collect();
    let labels = LabelSet::from_types(types).map_err(|e| CliError::Data(e.to_string()))?;
    let enc = |c: &Corpus| -> Result<Vec<EncodedRecord>, CliError> {
        c.records()
            .iter()
            .map(|r| encode(r, &vocab, &labels).map_err(|e| CliError::Data(e.to_string())))
            .collect()
    };
    Ok(Prepared {
        train: enc(&train)?,
        val: enc(&val)?,
        labels: labels.clone(),
        vocab,
    })
}

/// An empty split file is written as zero bytes, which does not parse as a
/// corpus; treat it as empty.
fn read_optional_corpus(path: &Path) -> Result<Corpus, CliError> {
    if !path.exists() {
        return Ok(Corpus::default());
    }
    let text = files::read_text(path)?;
    if text.trim().is_empty() {
        return Ok(Corpus::default());
    }
    read_corpus(path)
}

pub fn progress_line(row: &EpochRecord, max_epochs: usize) -> String {
    let opt = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format_sig(v, 6));
    format!(
        "epoch {}/{} train_loss={} val_loss={} val_span_f1={} lr={}",
        row.epoch,
        max_epochs,
        format_sig(row.train_loss, 6),
        opt(row.val_loss),
        opt(row.val_span_f1),
        format_sig(row.lr, 6)
    )
}

fn write_outputs<S: Scalar>(
    out: &Path,
    outcome: &TrainOutcome<S>,
    config: &ModelConfig,
    seed: u64,
    data: &Prepared,
) -> Result<(), CliError> {
    let ckpt = |params: &medner_core::model::Parameters<S>| Checkpoint {
        config: *config,
        seed,
        labels: data.labels.clone(),
        vocab: data.vocab.clone(),
        params: params.clone(),
    };
    save_checkpoint(
        &out.join(files::FINAL_CHECKPOINT),
        &ckpt(&outcome.final_params),
    )?;
    save_checkpoint(
        &out.join(files::BEST_CHECKPOINT),
        &ckpt(&outcome.best_params),
    )?;
    write_atomic(&out.join(files::TRAIN_LOG), outcome.log.to_csv().as_bytes())
}

fn run_typed<S: Scalar>(
    data: &Prepared,
    config: &ModelConfig,
    tc: &TrainConfig,
    out: &Path,
) -> Result<(), CliError> {
    let td = TrainData {
        train: &data.train,
        val: &data.val,
        labels: &data.labels,
    };
    match train::<S>(td, config, tc, |row| {
        outln!("{}", progress_line(row, tc.max_epochs))
    }) {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            write_outputs(out, &outcome, config, tc.seed, data)?;
            outln!(
                "best epoch {}; wrote {}, {}, {} to {}",
                outcome.best_epoch,
                files::FINAL_CHECKPOINT,
                files::BEST_CHECKPOINT,
                files::TRAIN_LOG,
                out.display()
            );
            Ok(())
        }
        Err(failure) => {
            if let Some(partial) = &failure.partial {
                write_outputs(out, partial, config, tc.seed, data)?;
                return Err(CliError::Numerical(format!(
                    "{}; last good checkpoint kept in {}",
                    failure.error,
                    out.display()
                )));
            }
            Err(match failure.error {
                TrainError::InvalidConfig(msg) => CliError::Usage(msg),
                e if e.is_numerical() => CliError::Numerical(e.to_string()),
                e => CliError::Data(e.to_string()),
            })
        }
    }
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load(&args.config)?;
    let seed = cfg.resolve_seed(args.seed)?;
    let precision = cfg.resolve_precision(args.precision)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.out_dir());
    let data = load_prepared(&cfg.prepared_dir())?;

    let config = cfg.model_config(data.vocab.len(), data.labels.len());
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let longest = data
        .train
        .iter()
        .chain(&data.val)
        .map(EncodedRecord::len)
        .max()
        .unwrap_or(0);
    if longest > config.max_len {
        return Err(CliError::Data(format!(
            "a prepared record has {longest} tokens but model.max_len is {}",
            config.max_len
        )));
    }
    let tc = cfg.train_config(seed);
    match precision {
        Precision::F32 => run_typed::<f32>(&data, &config, &tc, &out),
        Precision::F64 => run_typed::<f64>(&data, &config, &tc, &out),
    }
}
