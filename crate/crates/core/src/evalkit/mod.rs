//! Detection and identification metrics, a deterministic synthetic scene
//! generator, and the on-disk dataset layout.

mod dataset;
mod metrics;
mod scene;
mod sequence;

pub use dataset::{
    frame_stem, load_ground_truth, read_meta, read_poses, write_ground_truth, write_sequence_dataset,
    DatasetMeta, DatasetSummary,
};
pub use metrics::{
    average_precision, coco_thresholds, identification_metrics, iou, iou_corners, match_detections, mean_ap,
    ConfusionCounts, IdentificationMetrics, MatchOutcome, ScoredBox,
};
pub use scene::{generate_scene, render_template, BoatSpec, SceneSpec};
pub use sequence::{SequenceFrame, SequenceSpec};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::{Detection, GatewayError};
use crate::imaging::ImagingError;

/// Labeled boxes of one frame and which of them, if any, is the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthFrame {
    pub frame_id: u64,
    pub boxes: Vec<Detection>,
    pub target_index: Option<usize>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{0} exists and is not empty (use --force to overwrite)")]
    Exists(PathBuf),
    #[error("{}:{line}: {message}", path.display())]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Annotation(#[from] GatewayError),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
