//! Reading and writing the on-disk artifacts.

use std::fs;
use std::io::{ErrorKind, Write};
use std::path::Path;

use medner_core::corpus::{parse_conll, Corpus, Vocabulary};
use medner_core::model::{decode_checkpoint, encode_checkpoint, AnyCheckpoint, Checkpoint};
use medner_core::Scalar;

use crate::CliError;

pub const TRAIN_FILE: &str = "train.conll";
pub const VAL_FILE: &str = "val.conll";
pub const TEST_FILE: &str = "test.conll";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const PREPARE_MANIFEST: &str = "manifest.toml";
pub const FINAL_CHECKPOINT: &str = "final.ckpt";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const TRAIN_LOG: &str = "trainlog.csv";
pub const REPORT_FILE: &str = "report.txt";

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Writes through a temporary file in the target directory, then renames,
/// so an existing file is either kept or fully replaced.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Corpus, CliError> {
    let text = read_text(path)?;
    parse_conll(&text).map_err(|e| CliError::in_file(path, e))
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary, CliError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => CliError::Data(format!(
            "{}: vocabulary file not found; run `medner prepare` first",
            path.display()
        )),
        _ => CliError::io(path, e),
    })?;
    Vocabulary::from_file_str(&text).map_err(|e| CliError::in_file(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<AnyCheckpoint, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_checkpoint(&bytes).map_err(|e| CliError::in_file(path, e))
}

pub fn save_checkpoint<S: Scalar>(path: &Path, ckpt: &Checkpoint<S>) -> Result<(), CliError> {
    write_atomic(path, &encode_checkpoint(ckpt))
}
