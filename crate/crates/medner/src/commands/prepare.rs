use std::path::{Path, PathBuf};

use medner_core::corpus::{
    build_vocab, deidentify, gen_synthetic, split, validate_bio, write_conll, BioMode, Corpus,
    SyntheticSpec,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::files::{self, read_corpus, write_atomic};
use crate::CliError;

#[derive(Debug, Clone, clap::Args)]
pub struct PrepareArgs {
    /// Raw labeled corpus; defaults to `data.raw` or `[data.synthetic]`.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to `data.prepared_dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Turn orphan I- tags into B- instead of rejecting the record.
    #[arg(long)]
    pub repair: bool,
}

#[derive(Serialize)]
struct PrepareManifest {
    source: String,
    seed: u64,
    repair: bool,
    train_frac: f64,
    val_frac: f64,
    test_frac: f64,
    n_records: usize,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    vocab_size: usize,
    entity_types: Vec<String>,
}

fn load_raw(
    input: Option<&Path>,
    cfg: &RunConfig,
    seed: u64,
) -> Result<(Corpus, String), CliError> {
    if let Some(path) = input.or(cfg.data.raw.as_deref()) {
        return Ok((read_corpus(path)?, path.display().to_string()));
    }
    let Some(syn) = &cfg.data.synthetic else {
        return Err(CliError::Usage(
            "no input corpus: pass INPUT, or set `data.raw` or `[data.synthetic]` in the config"
                .into(),
        ));
    };
    let spec = SyntheticSpec {
        n_records: syn.n_records,
        entity_types: syn.entity_types.clone(),
        vocab_size: syn.vocab_size,
        max_len: syn.max_len,
        seed,
    };
    let corpus =
        gen_synthetic(&spec).map_err(|e| CliError::Usage(format!("data.synthetic: {e}")))?;
    Ok((corpus, "synthetic".to_string()))
}

/// De-identifies every record and checks (or repairs) its BIO labels.
pub fn clean(corpus: &Corpus, mode: BioMode) -> Result<Corpus, CliError> {
    let records = corpus
        .records()
        .iter()
        .map(|r| {
            let r = deidentify(r);
            let labels = validate_bio(r.labels(), mode)
                .map_err(|e| CliError::Data(format!("record {}: {e}", r.record_id)))?;
            r.with_labels(labels)
                .map_err(|e| CliError::Data(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Corpus::new(records).map_err(|e| CliError::Data(e.to_string()))
}

pub fn run(args: &PrepareArgs) -> Result<(), CliError> {
    let cfg = RunConfig::load_optional(args.config.as_deref())?;
    let seed = cfg.resolve_seed(args.seed)?;
    let repair = args.repair || cfg.data.repair;
    let out = args.out.clone().unwrap_or_else(|| cfg.prepared_dir());

    let (raw, source) = load_raw(args.input.as_deref(), &cfg, seed)?;
    let mode = if repair {
        BioMode::Repair
    } else {
        BioMode::Strict
    };
    let corpus = clean(&raw, mode).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{source}: {msg}")),
        other => other,
    })?;
    let spec = cfg.split_spec(seed);
    let parts = split(&corpus, &spec).map_err(|e| CliError::Usage(e.to_string()))?;
    for w in &parts.warnings {
        eprintln!("warning: {w}");
    }
    let vocab = build_vocab(&parts.train, cfg.data.min_freq, cfg.data.max_vocab);

    let manifest = PrepareManifest {
        source,
        seed,
        repair,
        train_frac: spec.train_frac,
        val_frac: spec.val_frac,
        test_frac: spec.test_frac,
        n_records: corpus.len(),
        n_train: parts.train.len(),
        n_val: parts.val.len(),
        n_test: parts.test.len(),
        vocab_size: vocab.len(),
        entity_types: corpus.label_inventory().iter().cloned().collect(),
    };
    let manifest = toml::to_string(&manifest).map_err(|e| CliError::Data(e.to_string()))?;

    write_atomic(
        &out.join(files::TRAIN_FILE),
        write_conll(&parts.train).as_bytes(),
    )?;
    write_atomic(
        &out.join(files::VAL_FILE),
        write_conll(&parts.val).as_bytes(),
    )?;
    write_atomic(
        &out.join(files::TEST_FILE),
        write_conll(&parts.test).as_bytes(),
    )?;
    write_atomic(
        &out.join(files::VOCAB_FILE),
        vocab.to_file_string().as_bytes(),
    )?;
    write_atomic(&out.join(files::PREPARE_MANIFEST), manifest.as_bytes())?;
    outln!(
        "prepared {} records: train {}, val {}, test {}; vocabulary {} -> {}",
        corpus.len(),
        parts.train.len(),
        parts.val.len(),
        parts.test.len(),
        vocab.len(),
        out.display()
    );
    Ok(())
}
