use std::path::PathBuf;

use vesselid_core::evalkit::{write_sequence_dataset, SequenceSpec};

use crate::error::CliError;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Output directory.
    #[arg(long, short)]
    out: PathBuf,

    /// Sequence spec (TOML); omitted keys take the built-in defaults.
    #[arg(long)]
    spec: Option<PathBuf>,

    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Overrides the spec's frame count.
    #[arg(long)]
    frames: Option<u32>,

    /// Replace a previously generated dataset in a non-empty directory.
    #[arg(long)]
    force: bool,
}

pub fn run(args: Args) -> Result<(), CliError> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            toml::from_str::<SequenceSpec>(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?
        }
        None => SequenceSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(frames) = args.frames {
        spec.frames = frames;
    }
    let summary = write_sequence_dataset(&args.out, &spec, args.force)?;
    println!("{}", serde_json::to_string(&summary).expect("plain struct"));
    Ok(())
}
