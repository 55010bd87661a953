//! CoNLL-style `token<TAB>tag` files.
//!
//! Records are separated by blank lines. Lines starting with `# ` are
//! comments; `# id: NAME` names the record it precedes or sits in. Records
//! without an id comment are named by their 1-based block ordinal, zero
//! padded to six digits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Corpus, CorpusError, LabeledRecord, TagLabel, Token};

const ID_PREFIX: &str = "# id:";

fn default_id(ordinal: usize) -> String {
    format!("{ordinal:06}")
}

fn is_comment(line: &str) -> bool {
    line == "#" || line.starts_with("# ")
}

/// Blank-line separated blocks of `(line_number, line)`, with comment lines
/// routed to `on_comment` instead.
fn blocks<'a>(
    text: &'a str,
    mut on_comment: impl FnMut(&'a str),
    mut on_block: impl FnMut(Vec<(usize, &'a str)>) -> Result<(), CorpusError>,
) -> Result<(), CorpusError> {
    let mut current: Vec<(usize, &str)> = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                on_block(core::mem::take(&mut current))?;
            }
        } else if is_comment(line) {
            on_comment(line);
        } else {
            current.push((i + 1, line));
        }
    }
    if !current.is_empty() {
        on_block(current)?;
    }
    Ok(())
}

pub fn parse_conll(text: &str) -> Result<Corpus, CorpusError> {
    let mut records = Vec::new();
    let pending_id = core::cell::RefCell::new(None::<String>);
    blocks(
        text,
        |comment| {
            if let Some(id) = comment.strip_prefix(ID_PREFIX) {
                *pending_id.borrow_mut() = Some(id.trim().to_string());
            }
        },
        |lines| {
            let mut tokens = Vec::with_capacity(lines.len());
            let mut labels = Vec::with_capacity(lines.len());
            for (line_no, line) in lines {
                let mut fields = line.split('\t');
                let (tok, tag) = match (fields.next(), fields.next(), fields.next()) {
                    (Some(tok), Some(tag), None) => (tok, tag),
                    _ => return Err(CorpusError::MalformedLine { line: line_no }),
                };
                let token = Token::new(tok).map_err(|_| CorpusError::BadToken {
                    line: line_no,
                    token: tok.to_string(),
                })?;
                let label: TagLabel = tag.parse().map_err(|_| CorpusError::BadTag {
                    line: line_no,
                    tag: tag.to_string(),
                })?;
                tokens.push(token);
                labels.push(label);
            }
            let id = pending_id
                .borrow_mut()
                .take()
                .unwrap_or_else(|| default_id(records.len() + 1));
            records.push(LabeledRecord::new(id, tokens, labels)?);
            Ok(())
        },
    )?;
    if records.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    Corpus::new(records)
}

/// Serializes a corpus; `parse_conll` of the output reproduces it.
pub fn write_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, record) in corpus.records().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "{ID_PREFIX} {}", record.record_id);
        for (tok, label) in record.tokens().iter().zip(record.labels()) {
            let _ = writeln!(out, "{tok}\t{label}");
        }
    }
    out
}

/// Unlabeled input: one token per line, one record per blank-line block.
/// Comment lines are skipped.
pub fn parse_token_blocks(text: &str) -> Result<Vec<Vec<Token>>, CorpusError> {
    let mut out = Vec::new();
    blocks(
        text,
        |_| {},
        |lines| {
            let block = lines
                .into_iter()
                .map(|(line_no, line)| {
                    let tok = line.split('\t').next().unwrap_or(line).trim();
                    Token::new(tok).map_err(|_| CorpusError::BadToken {
                        line: line_no,
                        token: line.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.push(block);
            Ok(())
        },
    )?;
    if out.is_empty() {
        return Err(CorpusError::EmptyFile);
    }
    Ok(out)
}
