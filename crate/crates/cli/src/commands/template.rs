use std::path::PathBuf;

use vesselid_core::identify::save_template_bundle;
use vesselid_core::imaging::read_png;

use crate::config::AppConfig;
use crate::error::CliError;

#[derive(Debug, clap::Args)]
pub struct Args {
    /// The two target cutouts (RGBA PNG, background transparent).
    #[arg(num_args = 2, required = true, value_names = ["T1", "T2"])]
    images: Vec<PathBuf>,

    /// Bundle directory to write.
    #[arg(long, short)]
    out: PathBuf,
}

pub fn run(args: Args, cfg: &AppConfig) -> Result<(), CliError> {
    let id_cfg = cfg.identify_config();
    let mut images = Vec::with_capacity(2);
    for path in &args.images {
        let img = read_png(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        images.push(img);
    }
    let templates = save_template_bundle(&args.out, [&images[0], &images[1]], &id_cfg)?;
    for (t, path) in templates.iter().zip(&args.images) {
        println!(
            "template{}: {} keypoints, {} hue pixels, hue entropy {:.3} bits ({})",
            t.template_id,
            t.features.len(),
            t.histogram.pixel_count,
            t.histogram.entropy(),
            path.display()
        );
    }
    Ok(())
}
