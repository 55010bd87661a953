use std::path::PathBuf;

use medner_core::corpus::{gen_synthetic, write_conll, SyntheticSpec};

use crate::config::RunConfig;
use crate::files::write_atomic;
use crate::CliError;

#[derive(Debug, Clone, clap::Args)]
pub struct GenSyntheticArgs {
    /// Output corpus file.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    pub n_records: usize,
    /// Comma-separated entity types.
    #[arg(long, default_value = "Disease,Drug,Symptom", value_delimiter = ',')]
    pub entity_types: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 24)]
    pub max_len: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &GenSyntheticArgs) -> Result<(), CliError> {
    let seed = RunConfig::default().resolve_seed(args.seed)?;
    let spec = SyntheticSpec {
        n_records: args.n_records,
        entity_types: args
            .entity_types
            .iter()
            .map(|t| t.trim().to_string())
            .collect(),
        vocab_size: args.vocab_size,
        max_len: args.max_len,
        seed,
    };
    let corpus = gen_synthetic(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let header = format!(
        "# generated by medner gen-synthetic: n_records={} entity_types={} vocab_size={} max_len={} seed={}\n",
        spec.n_records,
        spec.entity_types.join(","),
        spec.vocab_size,
        spec.max_len,
        spec.seed
    );
    write_atomic(&args.out, (header + &write_conll(&corpus)).as_bytes())?;
    outln!(
        "wrote {} records ({} tokens) to {}",
        corpus.len(),
        corpus.n_tokens(),
        args.out.display()
    );
    Ok(())
}
