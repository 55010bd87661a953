use std::path::{Path, PathBuf};

use medner_core::corpus::{LabelSet, TagLabel};
use medner_core::eval::{evaluate, evaluate_predictions, format_pct, EvalError, EvalReport};
use medner_core::model::AnyCheckpoint;

use crate::config::RunConfig;
use crate::files::{self, load_checkpoint, read_corpus, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, clap::Args)]
pub struct EvalArgs {
    /// Labeled corpus to score; defaults to the prepared test split.
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Defaults to `best.ckpt` in the run output directory.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Directory for the report file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Score the gold labels against themselves (sanity check of the
    /// metric pipeline); no model is run.
    #[arg(long)]
    pub gold_as_pred: bool,
}

fn eval_error(e: EvalError) -> CliError {
    CliError::Data(e.to_string())
}

pub fn summary_line(report: &EvalReport) -> String {
    let h = report.headline();
    format!(
        "span micro P/R/F1 (%) = {}/{}/{}",
        format_pct(100.0 * h.precision),
        format_pct(100.0 * h.recall),
        format_pct(100.0 * h.f1)
    )
}

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.config.as_deref())?;
    let corpus_path = match (&args.corpus, &args.config) {
        (Some(p), _) => p.clone(),
        (None, Some(_)) => cfg.prepared_dir().join(files::TEST_FILE),
        (None, None) => {
            return Err(CliError::Usage(
                "no corpus given: pass CORPUS or --config".into(),
            ))
        }
    };
    let corpus = read_corpus(&corpus_path)?;
    let ckpt_path = args.checkpoint.clone().or_else(|| {
        args.config
            .as_ref()
            .map(|_| cfg.out_dir().join(files::BEST_CHECKPOINT))
    });

    let report = if args.gold_as_pred {
        let labels = match &ckpt_path {
            Some(p) if args.checkpoint.is_some() => load_checkpoint(p)?.labels().clone(),
            _ => LabelSet::from_types(corpus.label_inventory().iter().map(String::as_str))
                .map_err(|e| CliError::Data(e.to_string()))?,
        };
        let gold: Vec<Vec<TagLabel>> = corpus
            .records()
            .iter()
            .map(|r| r.labels().to_vec())
            .collect();
        evaluate_predictions(&gold, &corpus, &labels).map_err(eval_error)?
    } else {
        let Some(path) = &ckpt_path else {
            return Err(CliError::Usage(
                "no checkpoint given: pass --checkpoint or --config".into(),
            ));
        };
        match load_checkpoint(path)? {
            AnyCheckpoint::F32(c) => evaluate(&c, &corpus),
            AnyCheckpoint::F64(c) => evaluate(&c, &corpus),
        }
        .map_err(eval_error)?
    };

    let report_dir: Option<PathBuf> = args
        .out
        .clone()
        .or_else(|| args.config.as_ref().map(|_| cfg.out_dir()))
        .or_else(|| {
            ckpt_path
                .as_deref()
                .and_then(Path::parent)
                .map(Path::to_path_buf)
        });
    outln!("{}", summary_line(&report));
    if let Some(dir) = report_dir {
        let path = dir.join(files::REPORT_FILE);
        write_atomic(&path, report.to_text().as_bytes())?;
        outln!("report written to {}", path.display());
    }
    Ok(())
}
