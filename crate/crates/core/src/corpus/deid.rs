//! Rule-based scrubbing of protected health information.
//!
//! Rules, in priority order:
//! - MIMIC-style placeholders `[**...**]` become `<PHI>`; a placeholder split
//!   over several tokens has every covered token replaced.
//! - Date-shaped tokens (three 1-4 digit fields joined by `/` or `-`) become
//!   `<DATE>`.
//! - Tokens containing a run of five or more digits become `<ID>`.
//!
//! Labels are never touched and the rewrite is idempotent.

use super::{LabeledRecord, Token};

pub const PHI_PLACEHOLDER: &str = "<PHI>";
pub const DATE_PLACEHOLDER: &str = "<DATE>";
pub const ID_PLACEHOLDER: &str = "<ID>";

/// Longest multi-token placeholder that is still joined up.
const MAX_PLACEHOLDER_TOKENS: usize = 8;

fn is_placeholder(s: &str) -> bool {
    s.len() >= 6 && s.starts_with("[**") && s.ends_with("**]")
}

fn is_date(s: &str) -> bool {
    let sep = match s.chars().find(|c| !c.is_ascii_digit()) {
        Some(c @ ('/' | '-')) => c,
        _ => return false,
    };
    let mut n = 0;
    for field in s.split(sep) {
        n += 1;
        if field.is_empty() || field.len() > 4 || !field.bytes().all(|b| b.is_ascii_digit()) {
            return false;
        }
    }
    n == 3
}

fn has_long_digit_run(s: &str) -> bool {
    let mut run = 0;
    for b in s.bytes() {
        if b.is_ascii_digit() {
            run += 1;
            if run >= 5 {
                return true;
            }
        } else {
            run = 0;
        }
    }
    false
}

/// Single-token rules only.
pub fn deidentify_token(text: &str) -> Option<&'static str> {
    if is_placeholder(text) {
        Some(PHI_PLACEHOLDER)
    } else if is_date(text) {
        Some(DATE_PLACEHOLDER)
    } else if has_long_digit_run(text) {
        Some(ID_PLACEHOLDER)
    } else {
        None
    }
}

fn placeholder_end(tokens: &[Token], start: usize) -> Option<usize> {
    let first = tokens[start].as_str();
    if !first.starts_with("[**") || first.ends_with("**]") {
        return None;
    }
    (start + 1..tokens.len().min(start + MAX_PLACEHOLDER_TOKENS))
        .find(|&j| tokens[j].as_str().ends_with("**]"))
}

pub fn deidentify(record: &LabeledRecord) -> LabeledRecord {
    let mut out = record.clone();
    let tokens = out.tokens_mut();
    let mut i = 0;
    while i < tokens.len() {
        if let Some(end) = placeholder_end(tokens, i) {
            for tok in &mut tokens[i..=end] {
                *tok = Token::new(PHI_PLACEHOLDER).expect("placeholder is a valid token");
            }
            i = end + 1;
            continue;
        }
        if let Some(replacement) = deidentify_token(tokens[i].as_str()) {
            tokens[i] = Token::new(replacement).expect("placeholder is a valid token");
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn texts(r: &LabeledRecord) -> Vec<&str> {
        r.tokens().iter().map(Token::as_str).collect()
    }

    #[test]
    fn rules() {
        assert_eq!(deidentify_token("1234567"), Some("<ID>"));
        assert_eq!(deidentify_token("MRN:00012345"), Some("<ID>"));
        assert_eq!(deidentify_token("1234"), None);
        assert_eq!(deidentify_token("12/03/2019"), Some("<DATE>"));
        assert_eq!(deidentify_token("2019-03-12"), Some("<DATE>"));
        assert_eq!(deidentify_token("12/03-2019"), None);
        assert_eq!(deidentify_token("12/03"), None);
        assert_eq!(deidentify_token("50/25/10/5"), None);
        assert_eq!(deidentify_token("[**Known**]"), Some("<PHI>"));
        assert_eq!(deidentify_token("aspirin"), None);
        assert_eq!(deidentify_token("<ID>"), None);
    }

    #[test]
    fn record_rewrite_keeps_labels() {
        let r = LabeledRecord::from_pairs(
            "r",
            &[
                ("seen", "O"),
                ("[**Hospital1", "O"),
                ("18**]", "O"),
                ("on", "O"),
                ("2150-3-1", "O"),
                ("aspirin", "B-Drug"),
                ("12345", "O"),
            ],
        )
        .unwrap();
        let d = deidentify(&r);
        assert_eq!(
            texts(&d),
            ["seen", "<PHI>", "<PHI>", "on", "<DATE>", "aspirin", "<ID>"]
        );
        assert_eq!(d.labels(), r.labels());
        assert_eq!(deidentify(&d), d);
    }

    #[test]
    fn unterminated_placeholder_is_left_alone() {
        let r = LabeledRecord::from_pairs("r", &[("[**Name", "O"), ("x", "O")]).unwrap();
        assert_eq!(texts(&deidentify(&r)), ["[**Name", "x"]);
    }
}
