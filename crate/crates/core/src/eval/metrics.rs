use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use super::EvalError;
use crate::corpus::{spans_from_labels, validate_bio, BioMode, EntitySpan, LabelSet, TagLabel};

/// Precision, recall and F1, each 0 when its denominator is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// True/false positive and false negative counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Counts {
    pub fn prf(&self) -> Prf {
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Prf {
            precision,
            recall,
            f1,
        }
    }

    pub fn add(&mut self, other: &Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }

    /// Gold items (`tp + fn`).
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }
}

/// Exact-match entity span counts, per type and pooled.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpanMetrics {
    pub per_type: BTreeMap<String, Counts>,
    pub micro: Counts,
}

impl SpanMetrics {
    fn add_record(&mut self, pred: &[EntitySpan], gold: &[EntitySpan]) {
        let gold_set: BTreeSet<&EntitySpan> = gold.iter().collect();
        let pred_set: BTreeSet<&EntitySpan> = pred.iter().collect();
        for s in &pred_set {
            let c = self.per_type.entry(s.entity_type.clone()).or_default();
            if gold_set.contains(s) {
                c.tp += 1;
            } else {
                c.fp += 1;
            }
        }
        for s in gold_set.difference(&pred_set) {
            self.per_type.entry(s.entity_type.clone()).or_default().fn_ += 1;
        }
    }
}

/// Span-level metrics over aligned records. Gold labels must be strict BIO;
/// predictions are repaired first. A predicted span counts only if start,
/// end and type all match a gold span.
pub fn span_metrics(
    pred: &[Vec<TagLabel>],
    gold: &[Vec<TagLabel>],
) -> Result<SpanMetrics, EvalError> {
    if pred.len() != gold.len() {
        return Err(EvalError::RecordCount {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    let mut m = SpanMetrics::default();
    for (record, (p, g)) in pred.iter().zip(gold).enumerate() {
        if p.len() != g.len() {
            return Err(EvalError::LengthMismatch {
                record,
                pred: p.len(),
                gold: g.len(),
            });
        }
        let gold_spans = spans_from_labels(&validate_bio(g, BioMode::Strict)?)?;
        let pred_spans = spans_from_labels(&validate_bio(p, BioMode::Repair)?)?;
        m.add_record(&pred_spans, &gold_spans);
    }
    for c in m.per_type.values() {
        m.micro.add(c);
    }
    Ok(m)
}

/// Per-label one-vs-rest token counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenMetrics {
    pub per_label: Vec<(String, Counts)>,
    /// Pooled over every label except `O`.
    pub micro: Counts,
}

/// Token-level metrics over flat label-id sequences. Positions where
/// `ignore` is true are skipped.
pub fn token_metrics(
    pred: &[u32],
    gold: &[u32],
    ignore: &[bool],
    labels: &LabelSet,
) -> Result<TokenMetrics, EvalError> {
    if pred.len() != gold.len() || ignore.len() != gold.len() {
        return Err(EvalError::ShapeMismatch {
            pred: pred.len(),
            gold: gold.len(),
            ignore: ignore.len(),
        });
    }
    let k = labels.len();
    let mut counts = vec![Counts::default(); k];
    for ((&p, &g), &skip) in pred.iter().zip(gold).zip(ignore) {
        if skip {
            continue;
        }
        for id in [p, g] {
            if id as usize >= k {
                return Err(EvalError::LabelOutOfRange { id, n_labels: k });
            }
        }
        if p == g {
            counts[g as usize].tp += 1;
        } else {
            counts[p as usize].fp += 1;
            counts[g as usize].fn_ += 1;
        }
    }
    let mut micro = Counts::default();
    for (label, c) in labels.labels().iter().zip(&counts) {
        if *label != TagLabel::O {
            micro.add(c);
        }
    }
    let per_label = labels
        .labels()
        .iter()
        .map(|l| l.to_string())
        .zip(counts)
        .collect();
    Ok(TokenMetrics { per_label, micro })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(s: &str) -> Vec<TagLabel> {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn perfect_and_empty_predictions() {
        let gold = vec![labels("B-D I-D O B-G"), labels("O B-D")];
        let m = span_metrics(&gold, &gold).unwrap();
        assert_eq!(
            m.micro.prf(),
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        let none = vec![labels("O O O O"), labels("O O")];
        let m = span_metrics(&none, &gold).unwrap();
        assert_eq!(
            m.micro,
            Counts {
                tp: 0,
                fp: 0,
                fn_: 3
            }
        );
        assert_eq!(
            m.micro.prf(),
            Prf {
                precision: 0.0,
                recall: 0.0,
                f1: 0.0
            }
        );
    }

    #[test]
    fn hand_tally() {
        let gold = vec![labels("B-D I-D O O B-G O")];
        let pred = vec![labels("B-D O O O B-G O")];
        let m = span_metrics(&pred, &gold).unwrap();
        assert_eq!(
            m.per_type["D"],
            Counts {
                tp: 0,
                fp: 1,
                fn_: 1
            }
        );
        assert_eq!(
            m.per_type["G"],
            Counts {
                tp: 1,
                fp: 0,
                fn_: 0
            }
        );
        assert_eq!(
            m.micro.prf(),
            Prf {
                precision: 0.5,
                recall: 0.5,
                f1: 0.5
            }
        );
    }

    #[test]
    fn predictions_are_repaired_gold_is_not() {
        let gold = vec![labels("B-D I-D O")];
        let pred = vec![labels("I-D I-D O")];
        assert_eq!(span_metrics(&pred, &gold).unwrap().micro.tp, 1);
        assert!(span_metrics(&gold, &pred).is_err());
    }

    #[test]
    fn length_errors() {
        let a = vec![labels("O O")];
        let b = vec![labels("O")];
        assert_eq!(
            span_metrics(&a, &b).unwrap_err(),
            EvalError::LengthMismatch {
                record: 0,
                pred: 2,
                gold: 1
            }
        );
        assert!(span_metrics(&a, &[]).is_err());
    }

    #[test]
    fn token_level_counts() {
        let set = LabelSet::from_types(["D"]).unwrap();
        let gold = [1, 2, 0, 0];
        let m = token_metrics(&gold, &gold, &[false; 4], &set).unwrap();
        assert_eq!(m.micro.prf().f1, 1.0);
        let all_o = [0, 0, 0, 0];
        let m = token_metrics(&all_o, &gold, &[false; 4], &set).unwrap();
        assert_eq!(
            m.micro,
            Counts {
                tp: 0,
                fp: 0,
                fn_: 2
            }
        );
        assert_eq!(m.micro.prf().precision, 0.0);
        assert_eq!(
            m.per_label[0],
            (
                "O".into(),
                Counts {
                    tp: 2,
                    fp: 2,
                    fn_: 0
                }
            )
        );
        let m = token_metrics(&[2, 2, 0, 0], &gold, &[true, false, false, false], &set).unwrap();
        assert_eq!(
            m.micro,
            Counts {
                tp: 1,
                fp: 0,
                fn_: 0
            }
        );
        assert!(token_metrics(&[5], &[0], &[false], &set).is_err());
        assert!(token_metrics(&[0, 0], &[0], &[false], &set).is_err());
    }
}
