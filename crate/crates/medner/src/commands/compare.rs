use std::path::PathBuf;

use medner_core::eval::{parse_results, render_comparison, sort_by_f1};

use crate::files::read_text;
use crate::CliError;

#[derive(Debug, Clone, clap::Args)]
pub struct CompareArgs {
    /// Results file with `name,precision,f1` lines (percent).
    pub results: PathBuf,
    /// Order rows by F1, highest first.
    #[arg(long)]
    pub sort: bool,
}

pub fn run(args: &CompareArgs) -> Result<(), CliError> {
    let text = read_text(&args.results)?;
    let mut rows = parse_results(&text).map_err(|e| CliError::in_file(&args.results, e))?;
    if args.sort {
        sort_by_f1(&mut rows);
    }
    let table = render_comparison(&rows).map_err(|e| CliError::in_file(&args.results, e))?;
    out!("{table}");
    Ok(())
}
