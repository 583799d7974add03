//! Frame selection and batched identification shared by `identify`,
//! `evaluate` and the mission gateway.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use vesselid_core::evalkit::read_meta;
use vesselid_core::gateway::{parse_annotation_file, FrameDetections, GatewayError, ReplayFrame, ReplaySource};
use vesselid_core::identify::{identify_frame_with_crops, AssessedCandidate};
use vesselid_core::imaging::read_png;
use vesselid_core::{IdentifyConfig, TemplateModel};

use crate::error::CliError;

pub const DEFAULT_FRAME_INTERVAL: f64 = 0.1;

/// Frames handed to the worker pool at once; bounds memory on long runs.
const BATCH: usize = 16;

/// Parses `a..b` (inclusive) or a single frame id.
pub fn parse_frame_range(s: &str) -> Result<RangeInclusive<u64>, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| format!("bad frame number {t:?}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b) = (num(a)?, num(b)?);
            if a > b {
                return Err(format!("empty frame range {s}"));
            }
            Ok(a..=b)
        }
        None => {
            let a = num(s)?;
            Ok(a..=a)
        }
    }
}

/// Frame interval recorded in `dataset.json`, or the default.
pub fn dataset_frame_interval(dir: &Path) -> f64 {
    read_meta(dir).map(|m| m.frame_interval).unwrap_or(DEFAULT_FRAME_INTERVAL)
}

pub fn open_dataset(dir: &Path, range: Option<RangeInclusive<u64>>) -> Result<ReplaySource, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Data(format!("{} is not a directory", dir.display())));
    }
    let src = ReplaySource::open(dir, dataset_frame_interval(dir))?;
    Ok(match range {
        Some(r) => src.with_range(r),
        None => src,
    })
}

/// A single image as frame 0, with detections from `labels` or the
/// same-stem `.txt` sidecar.
pub fn single_image_frame(image: &Path, labels: Option<&Path>) -> Result<ReplayFrame, CliError> {
    if !image.is_file() {
        return Err(CliError::Data(format!("{} does not exist", image.display())));
    }
    let label_path: PathBuf = labels.map(Path::to_path_buf).unwrap_or_else(|| image.with_extension("txt"));
    let detections = match std::fs::read_to_string(&label_path) {
        Ok(text) => parse_annotation_file(&text, &label_path.display().to_string())?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound && labels.is_none() => Vec::new(),
        Err(e) => return Err(CliError::Data(format!("{}: {e}", label_path.display()))),
    };
    Ok(ReplayFrame {
        frame: FrameDetections {
            frame_id: 0,
            timestamp: 0.0,
            detections,
        },
        image_path: image.to_path_buf(),
    })
}

pub fn identify_replay_frame(
    rf: &ReplayFrame,
    templates: &[TemplateModel; 2],
    cfg: &IdentifyConfig,
) -> Result<Vec<AssessedCandidate>, CliError> {
    let img = read_png(&rf.image_path).map_err(|e| CliError::Data(format!("{}: {e}", rf.image_path.display())))?;
    Ok(identify_frame_with_crops(&img, &rf.frame, templates, cfg))
}

/// Identifies every frame, calling `sink` in frame order. Frames are
/// processed in parallel batches; per-frame errors are logged and skipped.
/// Returns the number of frames that failed.
pub fn identify_all<I, F>(frames: I, templates: &[TemplateModel; 2], cfg: &IdentifyConfig, mut sink: F) -> Result<usize, CliError>
where
    I: IntoIterator<Item = Result<ReplayFrame, GatewayError>>,
    F: FnMut(&ReplayFrame, Vec<AssessedCandidate>) -> Result<(), CliError>,
{
    let mut failed = 0;
    let mut iter = frames.into_iter().peekable();
    while iter.peek().is_some() {
        let mut batch = Vec::with_capacity(BATCH);
        for item in iter.by_ref().take(BATCH) {
            match item {
                Ok(rf) => batch.push(rf),
                Err(e) => {
                    log::error!("skipping frame: {e}");
                    failed += 1;
                }
            }
        }
        let results: Vec<_> = batch
            .par_iter()
            .map(|rf| identify_replay_frame(rf, templates, cfg))
            .collect();
        for (rf, res) in batch.iter().zip(results) {
            match res {
                Ok(assessed) => sink(rf, assessed)?,
                Err(e) => {
                    log::error!("frame {}: {e}", rf.frame.frame_id);
                    failed += 1;
                }
            }
        }
    }
    Ok(failed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_ranges() {
        assert_eq!(parse_frame_range("0..10").unwrap(), 0..=10);
        assert_eq!(parse_frame_range("3..=5").unwrap(), 3..=5);
        assert_eq!(parse_frame_range("7").unwrap(), 7..=7);
        assert!(parse_frame_range("5..2").is_err());
        assert!(parse_frame_range("a..2").is_err());
    }
}
