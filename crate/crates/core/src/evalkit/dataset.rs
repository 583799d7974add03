use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DatasetError, GroundTruthFrame, SequenceSpec};
use crate::gateway::{format_annotation_line, parse_annotation_file};
use crate::geoloc::{parse_pose_line, UavPose};
use crate::imaging::write_png;

/// `dataset.json` at the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub frames: u32,
    pub frame_interval: f64,
    pub width: u32,
    pub height: u32,
    /// Generator parameters, when the dataset is synthetic.
    pub spec: Option<SequenceSpec>,
}

/// Aggregate facts about a freshly written dataset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub frames: u32,
    pub boxes: usize,
    pub target_frames: usize,
    pub min_target_area: f64,
    pub max_target_area: f64,
}

const GENERATED: [&str; 6] = ["images", "labels", "targets", "templates", "poses.ndjson", "dataset.json"];

pub fn frame_stem(frame_id: u64) -> String {
    format!("{frame_id:06}")
}

/// Writes a generated sequence. An existing non-empty directory is refused
/// unless `force`, in which case previously generated entries are removed.
pub fn write_sequence_dataset(dir: &Path, spec: &SequenceSpec, force: bool) -> Result<DatasetSummary, DatasetError> {
    if dir.exists() && fs::read_dir(dir)?.next().is_some() {
        if !force {
            return Err(DatasetError::Exists(dir.to_path_buf()));
        }
        for name in GENERATED {
            let p = dir.join(name);
            if p.is_dir() {
                fs::remove_dir_all(&p)?;
            } else if p.exists() {
                fs::remove_file(&p)?;
            }
        }
    }
    for sub in ["images", "labels", "targets", "templates"] {
        fs::create_dir_all(dir.join(sub))?;
    }

    let stats: Vec<(usize, Option<f64>)> = (0..spec.frames)
        .into_par_iter()
        .map(|i| -> Result<(usize, Option<f64>), DatasetError> {
            let f = spec.frame(i);
            let stem = frame_stem(i as u64);
            write_png(&f.image, dir.join("images").join(format!("{stem}.png")))?;
            write_ground_truth(dir, &f.truth)?;
            Ok((f.truth.boxes.len(), f.target_area))
        })
        .collect::<Result<_, _>>()?;

    let mut poses = String::new();
    for i in 0..spec.frames {
        poses.push_str(&spec.pose_at(i).to_ndjson());
        poses.push('\n');
    }
    fs::write(dir.join("poses.ndjson"), poses)?;

    let [t1, t2] = spec.templates();
    write_png(&t1, dir.join("templates/template1.png"))?;
    write_png(&t2, dir.join("templates/template2.png"))?;

    let meta = DatasetMeta {
        frames: spec.frames,
        frame_interval: spec.frame_interval,
        width: spec.intrinsics.width,
        height: spec.intrinsics.height,
        spec: Some(spec.clone()),
    };
    fs::write(dir.join("dataset.json"), serde_json::to_string_pretty(&meta).expect("plain struct") + "\n")?;

    let areas: Vec<f64> = stats.iter().filter_map(|s| s.1).collect();
    Ok(DatasetSummary {
        frames: spec.frames,
        boxes: stats.iter().map(|s| s.0).sum(),
        target_frames: areas.len(),
        min_target_area: areas.iter().copied().fold(f64::INFINITY, f64::min),
        max_target_area: areas.iter().copied().fold(0.0, f64::max),
    })
}

/// Writes `labels/NNNNNN.txt` and `targets/NNNNNN.txt` for one frame.
pub fn write_ground_truth(dir: &Path, gt: &GroundTruthFrame) -> Result<(), DatasetError> {
    let stem = frame_stem(gt.frame_id);
    let mut labels = String::new();
    for b in &gt.boxes {
        labels.push_str(&format_annotation_line(b, false));
        labels.push('\n');
    }
    fs::write(dir.join("labels").join(format!("{stem}.txt")), labels)?;
    let target = gt.target_index.map_or("-".to_string(), |k| k.to_string());
    fs::write(dir.join("targets").join(format!("{stem}.txt")), target + "\n")?;
    Ok(())
}

pub fn read_meta(dir: &Path) -> Result<DatasetMeta, DatasetError> {
    let path = dir.join("dataset.json");
    let text = fs::read_to_string(&path)?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Schema {
        path,
        line: e.line(),
        message: e.to_string(),
    })
}

fn parse_target(text: &str, path: &Path, boxes: usize) -> Result<Option<usize>, DatasetError> {
    let err = |line: usize, message: String| DatasetError::Schema {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut found = None;
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if found.is_some() {
            return Err(err(n + 1, "more than one target line".into()));
        }
        found = Some(if line == "-" {
            None
        } else {
            let k: usize = line
                .parse()
                .map_err(|_| err(n + 1, format!("expected a box index or '-', found {line:?}")))?;
            if k >= boxes {
                return Err(err(n + 1, format!("target index {k} but only {boxes} boxes")));
            }
            Some(k)
        });
    }
    Ok(found.flatten())
}

/// Reads every labeled frame, in frame id order. Frames without a target
/// file have no target.
pub fn load_ground_truth(dir: &Path) -> Result<Vec<GroundTruthFrame>, DatasetError> {
    let labels_dir = dir.join("labels");
    let mut files: Vec<PathBuf> = fs::read_dir(&labels_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    files.sort();
    let mut frames = Vec::with_capacity(files.len());
    for path in files {
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let frame_id: u64 = stem.parse().map_err(|_| DatasetError::Schema {
            path: path.clone(),
            line: 0,
            message: "label file name is not a frame number".into(),
        })?;
        let boxes = parse_annotation_file(&fs::read_to_string(&path)?, &path.display().to_string())?;
        let target_path = dir.join("targets").join(format!("{stem}.txt"));
        let target_index = match fs::read_to_string(&target_path) {
            Ok(text) => parse_target(&text, &target_path, boxes.len())?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };
        frames.push(GroundTruthFrame {
            frame_id,
            boxes,
            target_index,
        });
    }
    frames.sort_by_key(|f| f.frame_id);
    Ok(frames)
}

pub fn read_poses(path: &Path) -> Result<Vec<UavPose>, DatasetError> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            parse_pose_line(l).map_err(|e| DatasetError::Schema {
                path: path.to_path_buf(),
                line: n + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
