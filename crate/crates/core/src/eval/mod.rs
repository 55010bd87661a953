//! Token- and span-level precision/recall/F1, evaluation reports and the
//! model comparison table.
//!
//! The headline score is span-level micro F1 with exact matching. Token
//! metrics are reported alongside it.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use thiserror::Error;

use crate::corpus::{
    encode, validate_bio, BioMode, Corpus, CorpusError, EncodedRecord, LabelSet, TagLabel,
};
use crate::model::{
    forward, predict_labels, Checkpoint, ForwardMode, ModelConfig, ModelError, Parameters,
};
use crate::training::make_batches;
use crate::Scalar;

mod compare;
mod metrics;

pub use compare::{
    format_pct, parse_results, render_comparison, sort_by_f1, ComparisonRow, COMPARISON_HEADER,
};
pub use metrics::{span_metrics, token_metrics, Counts, Prf, SpanMetrics, TokenMetrics};

/// Records per forward pass during inference.
pub const INFERENCE_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("{pred} predicted records for {gold} gold records")]
    RecordCount { pred: usize, gold: usize },
    #[error("record {record}: {pred} predicted labels for {gold} gold labels")]
    LengthMismatch {
        record: usize,
        pred: usize,
        gold: usize,
    },
    #[error("shape mismatch: {pred} predictions, {gold} gold labels, {ignore} mask entries")]
    ShapeMismatch {
        pred: usize,
        gold: usize,
        ignore: usize,
    },
    #[error("label id {id} out of range for {n_labels} labels")]
    LabelOutOfRange { id: u32, n_labels: usize },
    #[error("corpus uses entity types unknown to the model: {}", missing.join(", "))]
    InventoryMismatch { missing: Vec<String> },
    #[error("no rows to compare")]
    EmptyTable,
    #[error("results line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Both metric families for one corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalReport {
    pub n_records: usize,
    pub n_tokens: usize,
    pub spans: SpanMetrics,
    pub tokens: TokenMetrics,
}

fn write_counts(out: &mut String, prefix: &str, c: &Counts) {
    let prf = c.prf();
    let _ = writeln!(out, "{prefix}.precision = {:.6}", prf.precision);
    let _ = writeln!(out, "{prefix}.recall = {:.6}", prf.recall);
    let _ = writeln!(out, "{prefix}.f1 = {:.6}", prf.f1);
    let _ = writeln!(out, "{prefix}.tp = {}", c.tp);
    let _ = writeln!(out, "{prefix}.fp = {}", c.fp);
    let _ = writeln!(out, "{prefix}.fn = {}", c.fn_);
    let _ = writeln!(out, "{prefix}.support = {}", c.support());
}

impl EvalReport {
    /// Span-level micro scores.
    pub fn headline(&self) -> Prf {
        self.spans.micro.prf()
    }

    /// `key = value` lines: counts, then a `[spans]` section, then `[tokens]`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n_records = {}", self.n_records);
        let _ = writeln!(out, "n_tokens = {}", self.n_tokens);
        let _ = writeln!(out, "headline = spans.micro.f1");
        let _ = writeln!(out, "[spans]");
        write_counts(&mut out, "micro", &self.spans.micro);
        for (ty, c) in &self.spans.per_type {
            write_counts(&mut out, &alloc::format!("type.{ty}"), c);
        }
        let _ = writeln!(out, "[tokens]");
        write_counts(&mut out, "micro", &self.tokens.micro);
        for (label, c) in &self.tokens.per_label {
            write_counts(&mut out, &alloc::format!("label.{label}"), c);
        }
        out
    }
}

/// Errors unless every entity type in `corpus` is known to `labels`.
pub fn check_inventory(labels: &LabelSet, corpus: &Corpus) -> Result<(), EvalError> {
    let known: Vec<&str> = labels.entity_types().collect();
    let missing: Vec<String> = corpus
        .label_inventory()
        .iter()
        .filter(|t| !known.contains(&t.as_str()))
        .cloned()
        .collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(EvalError::InventoryMismatch { missing })
    }
}

/// Arg-max label ids for every record, in input order, without dropout.
pub fn predict_ids<S: Scalar>(
    params: &Parameters<S>,
    config: &ModelConfig,
    records: &[EncodedRecord],
) -> Result<Vec<Vec<u32>>, ModelError> {
    let mut out = alloc::vec![Vec::new(); records.len()];
    for batch in make_batches(records, INFERENCE_BATCH, 0, false) {
        let (logits, _) = forward(params, config, batch.inputs(), ForwardMode::Eval)?;
        let ids = predict_labels(&logits);
        for (slot, &record) in batch.indices.iter().enumerate() {
            let start = slot * batch.seq_len;
            out[record] = ids[start..start + records[record].len()].to_vec();
        }
    }
    Ok(out)
}

/// Scores predicted label sequences against the gold labels of `corpus`.
/// Predictions are BIO-repaired before both metric families are computed.
pub fn evaluate_predictions(
    pred: &[Vec<TagLabel>],
    corpus: &Corpus,
    labels: &LabelSet,
) -> Result<EvalReport, EvalError> {
    check_inventory(labels, corpus)?;
    let gold: Vec<Vec<TagLabel>> = corpus
        .records()
        .iter()
        .map(|r| r.labels().to_vec())
        .collect();
    let spans = span_metrics(pred, &gold)?;
    let mut pred_ids = Vec::with_capacity(corpus.n_tokens());
    let mut gold_ids = Vec::with_capacity(corpus.n_tokens());
    for (p, g) in pred.iter().zip(&gold) {
        for l in validate_bio(p, BioMode::Repair)? {
            // Unknown predicted labels count as O.
            pred_ids.push(labels.id(&l).unwrap_or(0));
        }
        for l in g {
            gold_ids.push(
                labels
                    .id(l)
                    .ok_or_else(|| CorpusError::UnseenTag(l.to_string()))?,
            );
        }
    }
    let ignore = alloc::vec![false; gold_ids.len()];
    let tokens = token_metrics(&pred_ids, &gold_ids, &ignore, labels)?;
    Ok(EvalReport {
        n_records: corpus.len(),
        n_tokens: corpus.n_tokens(),
        spans,
        tokens,
    })
}

/// Runs the checkpoint over `corpus` and scores its predictions.
pub fn evaluate<S: Scalar>(ckpt: &Checkpoint<S>, corpus: &Corpus) -> Result<EvalReport, EvalError> {
    check_inventory(&ckpt.labels, corpus)?;
    let encoded = corpus
        .records()
        .iter()
        .map(|r| encode(r, &ckpt.vocab, &ckpt.labels))
        .collect::<Result<Vec<_>, _>>()?;
    let ids = predict_ids(&ckpt.params, &ckpt.config, &encoded)?;
    let pred: Vec<Vec<TagLabel>> = ids.iter().map(|r| ckpt.labels.decode(r)).collect();
    evaluate_predictions(&pred, corpus, &ckpt.labels)
}
