use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::{GeolocError, Rotation};

/// UAV pose in the world frame at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UavPose {
    pub timestamp: f64,
    pub position: [f64; 3],
    /// Body-to-world rotation.
    #[serde(rename = "rotation")]
    pub r_lora_uav: Rotation,
}

impl UavPose {
    pub fn position_vec(&self) -> Vector3<f64> {
        Vector3::from(self.position)
    }

    /// `{"timestamp", "position":[x,y,z], "rotation":[9 row-major]}`.
    pub fn to_ndjson(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

pub fn parse_pose_line(line: &str) -> Result<UavPose, GeolocError> {
    let pose: UavPose = serde_json::from_str(line.trim()).map_err(|e| GeolocError::Protocol(e.to_string()))?;
    pose.r_lora_uav.validate()?;
    Ok(pose)
}

/// Time-ordered pose history.
#[derive(Debug, Clone, Default)]
pub struct PoseBuffer {
    poses: Vec<UavPose>,
}

impl PoseBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_poses(mut poses: Vec<UavPose>) -> Self {
        poses.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Self { poses }
    }

    /// Inserts keeping timestamp order (appending is the common case).
    pub fn push(&mut self, pose: UavPose) {
        let idx = self.poses.partition_point(|p| p.timestamp <= pose.timestamp);
        self.poses.insert(idx, pose);
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn poses(&self) -> &[UavPose] {
        &self.poses
    }

    pub fn lookup(&self, t: f64, tol: f64) -> Result<UavPose, GeolocError> {
        pose_lookup(t, &self.poses, tol)
    }
}

/// Pose at time `t` from a timestamp-sorted buffer. Between two samples the
/// position is interpolated linearly and the rotation is taken from the
/// nearer sample. Fails if the nearest sample is more than `tol` away.
pub fn pose_lookup(t: f64, buffer: &[UavPose], tol: f64) -> Result<UavPose, GeolocError> {
    let no_pose = GeolocError::NoPose { t, tol };
    if buffer.is_empty() || !t.is_finite() {
        return Err(no_pose);
    }
    let idx = buffer.partition_point(|p| p.timestamp < t);
    let after = buffer.get(idx);
    let before = idx.checked_sub(1).map(|i| &buffer[i]);
    let nearest = match (before, after) {
        (Some(b), Some(a)) => {
            if t - b.timestamp <= a.timestamp - t {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => unreachable!("buffer is non-empty"),
    };
    if (nearest.timestamp - t).abs() > tol {
        return Err(no_pose);
    }
    match (before, after) {
        (Some(b), Some(a)) if a.timestamp > b.timestamp && t > b.timestamp && t < a.timestamp => {
            let s = (t - b.timestamp) / (a.timestamp - b.timestamp);
            let lerp = |i: usize| b.position[i] + s * (a.position[i] - b.position[i]);
            Ok(UavPose {
                timestamp: t,
                position: [lerp(0), lerp(1), lerp(2)],
                r_lora_uav: nearest.r_lora_uav,
            })
        }
        _ => Ok(*nearest),
    }
}
