use std::io::Write;
use std::path::PathBuf;

use vesselid_core::evalkit::frame_stem;
use vesselid_core::identify::load_template_bundle;
use vesselid_core::imaging::write_png;

use crate::annotate::annotate;
use crate::config::AppConfig;
use crate::error::CliError;
use crate::frames::{identify_all, identify_replay_frame, open_dataset, parse_frame_range, single_image_frame};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Dataset directory (images/ + labels/) or a flat directory of images
    /// with same-stem .txt detections.
    #[arg(long, conflicts_with = "image", required_unless_present = "image")]
    dataset: Option<PathBuf>,

    /// A single frame image.
    #[arg(long)]
    image: Option<PathBuf>,

    /// Detections for --image; defaults to the .txt next to the image.
    #[arg(long, requires = "image")]
    labels: Option<PathBuf>,

    /// Template bundle written by prepare-template.
    #[arg(long)]
    templates: PathBuf,

    /// Inclusive frame id range, e.g. 0..10.
    #[arg(long, value_parser = parse_frame_range, requires = "dataset")]
    frames: Option<std::ops::RangeInclusive<u64>>,

    /// Also write frames with verdict-colored boxes here.
    #[arg(long, value_name = "DIR")]
    annotate: Option<PathBuf>,
}

pub fn run(args: Args, cfg: &AppConfig) -> Result<(), CliError> {
    let id_cfg = cfg.identify_config();
    let templates = load_template_bundle(&args.templates, &id_cfg)?;
    if let Some(dir) = &args.annotate {
        std::fs::create_dir_all(dir)?;
    }
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());

    let mut sink = |rf: &vesselid_core::gateway::ReplayFrame, assessed: Vec<vesselid_core::identify::AssessedCandidate>| -> Result<(), CliError> {
        let reports: Vec<_> = assessed.into_iter().map(|a| a.report).collect();
        for r in &reports {
            writeln!(out, "{}", r.to_ndjson())?;
        }
        out.flush()?;
        if let Some(dir) = &args.annotate {
            let mut img = vesselid_core::imaging::read_png(&rf.image_path)?;
            annotate(&mut img, &reports);
            write_png(&img, dir.join(format!("{}.png", frame_stem(rf.frame.frame_id))))?;
        }
        Ok(())
    };

    let failed = if let Some(image) = &args.image {
        let rf = single_image_frame(image, args.labels.as_deref())?;
        let assessed = identify_replay_frame(&rf, &templates, &id_cfg)?;
        sink(&rf, assessed)?;
        0
    } else {
        let dir = args.dataset.as_ref().expect("clap requires dataset or image");
        let src = open_dataset(dir, args.frames.clone())?;
        identify_all(src, &templates, &id_cfg, sink)?
    };
    if failed > 0 {
        log::warn!("{failed} frame(s) failed and were skipped");
    }
    Ok(())
}
