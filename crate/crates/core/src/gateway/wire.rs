//! Newline-delimited JSON frames exchanged with an external detector:
//! `{"frame_id", "timestamp", "detections": [{"class_id","cx","cy","w","h","score"}]}`.

use serde::Deserialize;

use super::{Detection, FrameDetections, GatewayError};

#[derive(Deserialize)]
struct WireFrame {
    frame_id: u64,
    timestamp: f64,
    detections: Vec<WireDetection>,
}

#[derive(Deserialize)]
struct WireDetection {
    class_id: u32,
    cx: f64,
    cy: f64,
    w: f64,
    h: f64,
    #[serde(default = "one")]
    score: f64,
}

fn one() -> f64 {
    1.0
}

/// Parses one NDJSON line. Unknown keys are ignored.
pub fn ingest_wire_message(line: &str) -> Result<FrameDetections, GatewayError> {
    let frame: WireFrame = serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| {
        GatewayError::Protocol {
            offset: byte_offset(line, e.line(), e.column()),
            message: e.to_string(),
        }
    })?;
    if !frame.timestamp.is_finite() {
        return Err(GatewayError::Protocol {
            offset: 0,
            message: "non-finite timestamp".into(),
        });
    }
    let detections = frame
        .detections
        .into_iter()
        .map(|d| {
            for (name, v) in [("cx", d.cx), ("cy", d.cy), ("w", d.w), ("h", d.h), ("score", d.score)] {
                if !(-1e-6..=1.0 + 1e-6).contains(&v) {
                    return Err(GatewayError::Protocol {
                        offset: 0,
                        message: format!("{name}={v} outside [0, 1]"),
                    });
                }
            }
            Ok(Detection::new(d.class_id, d.cx, d.cy, d.w, d.h, d.score))
        })
        .collect::<Result<_, _>>()?;
    Ok(FrameDetections {
        frame_id: frame.frame_id,
        timestamp: frame.timestamp,
        detections,
    })
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    start + column.saturating_sub(1)
}

/// Canonical encoding: sorted keys, six-decimal floats, no whitespace.
pub fn serialize_wire_message(frame: &FrameDetections) -> String {
    let dets: Vec<String> = frame
        .detections
        .iter()
        .map(|d| {
            format!(
                "{{\"class_id\":{},\"cx\":{:.6},\"cy\":{:.6},\"h\":{:.6},\"score\":{:.6},\"w\":{:.6}}}",
                d.class_id, d.cx, d.cy, d.h, d.score, d.w
            )
        })
        .collect();
    format!(
        "{{\"detections\":[{}],\"frame_id\":{},\"timestamp\":{:.6}}}",
        dets.join(","),
        frame.frame_id,
        frame.timestamp
    )
}
