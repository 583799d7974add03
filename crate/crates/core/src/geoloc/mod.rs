//! Target geolocation: pixel ray, rotation into the shared world (ENU)
//! frame, intersection with the plane `z = h`, pose synchronization and
//! fix aggregation into a mean with a 1-sigma ellipse.

mod aggregate;
mod camera;
mod pose;

pub use aggregate::{aggregate_fixes, EllipseParams, FixAggregate};
pub use camera::{
    intersect_plane, locate_target, pixel_ray, project_point, ray_to_world, CameraIntrinsics,
    Extrinsics, Rotation,
};
pub use pose::{parse_pose_line, pose_lookup, PoseBuffer, UavPose};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeolocError {
    #[error("rotation matrix is not orthonormal with det +1")]
    InvalidRotation,
    #[error("ray does not reach the plane (v_z = {v_z})")]
    NoIntersection { v_z: f64 },
    #[error("camera at z = {z} is not above the plane z = {h}")]
    BelowPlane { z: f64, h: f64 },
    #[error("no pose within {tol} s of t = {t}")]
    NoPose { t: f64, tol: f64 },
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
    #[error("no fixes to aggregate")]
    NoFixes,
    #[error("pose message: {0}")]
    Protocol(String),
}

/// A reconstructed target position in the world frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetFix {
    pub timestamp: f64,
    pub frame_id: u64,
    pub x: f64,
    pub y: f64,
}

impl TargetFix {
    /// `{"timestamp","frame_id","x","y"}` on one line.
    pub fn to_ndjson(&self) -> String {
        serde_json::to_string(self).expect("plain struct")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeolocConfig {
    pub intrinsics: CameraIntrinsics,
    /// Camera-to-body rotation, 9 row-major entries.
    pub r_uav_cam: Rotation,
    /// Target height above sea level in meters.
    pub target_height: f64,
    /// Maximum pose/frame timestamp mismatch in seconds.
    pub sync_tol: f64,
}

impl Default for GeolocConfig {
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::default(),
            r_uav_cam: Rotation::camera_down(),
            target_height: 1.0,
            sync_tol: 0.1,
        }
    }
}

impl GeolocConfig {
    pub fn validate(&self) -> Result<(), GeolocError> {
        self.intrinsics.validate()?;
        self.r_uav_cam.validate()?;
        Ok(())
    }

    pub fn extrinsics(&self) -> Extrinsics {
        Extrinsics {
            r_uav_cam: self.r_uav_cam,
        }
    }
}
