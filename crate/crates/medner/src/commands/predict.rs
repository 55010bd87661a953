use std::fmt::Write as _;
use std::path::PathBuf;

use medner_core::corpus::{
    parse_token_blocks, validate_bio, BioMode, EncodedRecord, TagLabel, Token,
};
use medner_core::eval::predict_ids;
use medner_core::model::{AnyCheckpoint, Checkpoint};
use medner_core::Scalar;

use crate::config::RunConfig;
use crate::files::{self, load_checkpoint, read_text, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, clap::Args)]
pub struct PredictArgs {
    /// Unlabeled text: one token per line, records separated by blank lines.
    pub input: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to `best.ckpt` in the run output directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Tags every record; the result is BIO-repaired.
pub fn predict_tags<S: Scalar>(
    ckpt: &Checkpoint<S>,
    records: &[Vec<Token>],
) -> Result<Vec<Vec<TagLabel>>, CliError> {
    let encoded: Vec<EncodedRecord> = records
        .iter()
        .enumerate()
        .map(|(i, toks)| EncodedRecord {
            record_id: (i + 1).to_string(),
            token_ids: toks.iter().map(|t| ckpt.vocab.id(t.as_str())).collect(),
            label_ids: vec![0; toks.len()],
        })
        .collect();
    let ids = predict_ids(&ckpt.params, &ckpt.config, &encoded)
        .map_err(|e| CliError::Data(e.to_string()))?;
    ids.iter()
        .map(|r| {
            validate_bio(&ckpt.labels.decode(r), BioMode::Repair)
                .map_err(|e| CliError::Data(e.to_string()))
        })
        .collect()
}

pub fn run(args: &PredictArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.config.as_deref())?;
    let ckpt_path = match (&args.checkpoint, &args.config) {
        (Some(p), _) => p.clone(),
        (None, Some(_)) => cfg.out_dir().join(files::BEST_CHECKPOINT),
        (None, None) => {
            return Err(CliError::Usage(
                "no checkpoint given: pass --checkpoint or --config".into(),
            ))
        }
    };
    let text = read_text(&args.input)?;
    let records = parse_token_blocks(&text).map_err(|e| CliError::in_file(&args.input, e))?;
    let tags = match load_checkpoint(&ckpt_path)? {
        AnyCheckpoint::F32(c) => predict_tags(&c, &records)?,
        AnyCheckpoint::F64(c) => predict_tags(&c, &records)?,
    };
    let mut out = String::new();
    for (i, (toks, labels)) in records.iter().zip(&tags).enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (t, l) in toks.iter().zip(labels) {
            let _ = writeln!(out, "{t}\t{l}");
        }
    }
    match &args.out {
        Some(path) => write_atomic(path, out.as_bytes()),
        None => {
            out!("{out}");
            Ok(())
        }
    }
}
