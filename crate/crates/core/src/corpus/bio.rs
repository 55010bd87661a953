use alloc::string::ToString;
use alloc::vec::Vec;

use super::{CorpusError, EntitySpan, TagLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BioMode {
    /// Reject the first `I` that does not continue a same-type entity.
    Strict,
    /// Rewrite every such `I` to a `B` of the same type.
    Repair,
}

fn continues(prev: Option<&TagLabel>, ty: &str) -> bool {
    matches!(prev, Some(TagLabel::B(p)) | Some(TagLabel::I(p)) if p == ty)
}

pub fn validate_bio(labels: &[TagLabel], mode: BioMode) -> Result<Vec<TagLabel>, CorpusError> {
    let mut out: Vec<TagLabel> = Vec::with_capacity(labels.len());
    for (index, label) in labels.iter().enumerate() {
        match label {
            TagLabel::I(ty) if !continues(out.last(), ty) => match mode {
                BioMode::Strict => {
                    return Err(CorpusError::InvalidBio {
                        index,
                        label: label.to_string(),
                    })
                }
                BioMode::Repair => out.push(TagLabel::B(ty.clone())),
            },
            _ => out.push(label.clone()),
        }
    }
    Ok(out)
}

/// Maximal `B I*` runs, sorted by start. Errors on sequences that are not
/// strict-BIO valid.
pub fn spans_from_labels(labels: &[TagLabel]) -> Result<Vec<EntitySpan>, CorpusError> {
    let mut spans = Vec::new();
    let mut open: Option<EntitySpan> = None;
    for (i, label) in labels.iter().enumerate() {
        match label {
            TagLabel::I(ty) => match open.as_mut() {
                Some(span) if span.entity_type == *ty => span.end = i + 1,
                _ => {
                    return Err(CorpusError::InvalidBio {
                        index: i,
                        label: label.to_string(),
                    })
                }
            },
            TagLabel::B(ty) => {
                spans.extend(open.take());
                open = Some(EntitySpan::new(i, i + 1, ty.clone()));
            }
            TagLabel::O => spans.extend(open.take()),
        }
    }
    spans.extend(open);
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn tags(s: &[&str]) -> Vec<TagLabel> {
        s.iter().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn repair_rewrites_orphan_inside() {
        let out = validate_bio(&tags(&["O", "I-Drug"]), BioMode::Repair).unwrap();
        assert_eq!(out, tags(&["O", "B-Drug"]));
        let out = validate_bio(&tags(&["I-Drug", "I-Drug", "I-Dis"]), BioMode::Repair).unwrap();
        assert_eq!(out, tags(&["B-Drug", "I-Drug", "B-Dis"]));
    }

    #[test]
    fn strict_accepts_valid_and_rejects_type_change() {
        let valid = tags(&["B-Disease", "I-Disease", "O"]);
        assert_eq!(validate_bio(&valid, BioMode::Strict).unwrap(), valid);
        let err = validate_bio(&tags(&["B-Drug", "I-Disease"]), BioMode::Strict).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidBio { index: 1, .. }));
        let err = validate_bio(&tags(&["I-Drug"]), BioMode::Strict).unwrap_err();
        assert!(matches!(err, CorpusError::InvalidBio { index: 0, .. }));
    }

    #[test]
    fn spans_examples() {
        let spans = spans_from_labels(&tags(&["B-Drug", "I-Drug", "O", "B-Dis"])).unwrap();
        assert_eq!(
            spans,
            vec![EntitySpan::new(0, 2, "Drug"), EntitySpan::new(3, 4, "Dis")]
        );
        assert!(spans_from_labels(&tags(&["O", "O", "O"]))
            .unwrap()
            .is_empty());
        let spans = spans_from_labels(&tags(&["B-A", "B-A", "I-A"])).unwrap();
        assert_eq!(
            spans,
            vec![EntitySpan::new(0, 1, "A"), EntitySpan::new(1, 3, "A")]
        );
        assert!(spans_from_labels(&tags(&["O", "I-A"])).is_err());
    }
}
