//! Per-frame vessel detections: annotation replay, the NDJSON wire format
//! used by an external detector process, and area-based filtering.

mod annotation;
mod replay;
mod wire;

pub use annotation::{format_annotation_line, parse_annotation_file, parse_annotation_line};
pub use replay::{spawn_source, NdjsonSource, ReplayFrame, ReplaySource};
pub use wire::{ingest_wire_message, serialize_wire_message};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::NormBox;

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("malformed annotation line: {0}")]
    MalformedLine(String),
    #[error("annotation value {field}={value} outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
    #[error("{path}:{line}: {source}")]
    Annotation {
        path: String,
        line: usize,
        #[source]
        source: Box<GatewayError>,
    },
    #[error("protocol error at byte {offset}: {message}")]
    Protocol { offset: usize, message: String },
    #[error("invalid area filter: alpha_min={alpha_min}, alpha_max={alpha_max}")]
    InvalidConfig { alpha_min: f64, alpha_max: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One detector output: class, normalized center/size and confidence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: u32,
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub score: f64,
}

impl Detection {
    /// Builds a detection, clipping the box to the unit square and the
    /// score to `[0, 1]`.
    pub fn new(class_id: u32, cx: f64, cy: f64, w: f64, h: f64, score: f64) -> Self {
        let (cx, w) = clip_span(cx, w);
        let (cy, h) = clip_span(cy, h);
        Self {
            class_id,
            cx,
            cy,
            w,
            h,
            score: score.clamp(0.0, 1.0),
        }
    }

    pub fn bbox(&self) -> NormBox {
        NormBox::new(self.cx, self.cy, self.w, self.h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

/// Clips `center +- size/2` to `[0, 1]`, leaving in-range spans untouched.
fn clip_span(center: f64, size: f64) -> (f64, f64) {
    let (lo, hi) = (center - size / 2.0, center + size / 2.0);
    if lo >= 0.0 && hi <= 1.0 {
        return (center, size);
    }
    let (lo, hi) = (lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0));
    ((lo + hi) / 2.0, hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetections {
    pub frame_id: u64,
    pub timestamp: f64,
    pub detections: Vec<Detection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AreaFilterConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
}

impl Default for AreaFilterConfig {
    fn default() -> Self {
        Self {
            alpha_min: 5e-5,
            alpha_max: 0.25,
        }
    }
}

impl AreaFilterConfig {
    pub fn validate(&self) -> Result<(), GatewayError> {
        let ok = 0.0 <= self.alpha_min && self.alpha_min < self.alpha_max && self.alpha_max <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(GatewayError::InvalidConfig {
                alpha_min: self.alpha_min,
                alpha_max: self.alpha_max,
            })
        }
    }

    pub fn accepts(&self, det: &Detection) -> bool {
        let area = det.area();
        self.alpha_min <= area && area <= self.alpha_max
    }
}

/// Keeps detections whose normalized area `w * h` lies within the bounds.
pub fn area_filter(dets: &[Detection], cfg: &AreaFilterConfig) -> Vec<Detection> {
    dets.iter().filter(|d| cfg.accepts(d)).copied().collect()
}

/// Class allow-list; an empty list lets every class through.
pub fn class_filter(dets: &[Detection], allowed: &[u32]) -> Vec<Detection> {
    if allowed.is_empty() {
        return dets.to_vec();
    }
    dets.iter()
        .filter(|d| allowed.contains(&d.class_id))
        .copied()
        .collect()
}
