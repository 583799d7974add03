use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{GeolocError, UavPose};

const ORTHO_TOL: f64 = 1e-9;
const PARALLEL_EPS: f64 = 1e-9;

/// Pinhole intrinsics in pixels; axes are x right, y down, z forward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub f: f64,
    pub cx_pp: f64,
    pub cy_pp: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    fn default() -> Self {
        Self {
            f: 600.0,
            cx_pp: 320.0,
            cy_pp: 240.0,
            width: 640,
            height: 480,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<(), GeolocError> {
        if !(self.f > 0.0 && self.f.is_finite()) {
            return Err(GeolocError::InvalidIntrinsics(format!("focal length {}", self.f)));
        }
        let inside = (0.0..=self.width as f64).contains(&self.cx_pp)
            && (0.0..=self.height as f64).contains(&self.cy_pp);
        if !inside {
            return Err(GeolocError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{}",
                self.cx_pp, self.cy_pp, self.width, self.height
            )));
        }
        Ok(())
    }
}

/// 3x3 rotation matrix, serialized as 9 row-major entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(pub Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn from_row_major(m: [f64; 9]) -> Self {
        Self(Matrix3::from_row_slice(&m))
    }

    pub fn to_row_major(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[(0, 0)], m[(0, 1)], m[(0, 2)],
            m[(1, 0)], m[(1, 1)], m[(1, 2)],
            m[(2, 0)], m[(2, 1)], m[(2, 2)],
        ]
    }

    /// Camera looking straight down from a body whose x axis is forward
    /// (east at zero yaw) and z axis up: camera x -> body -y,
    /// camera y -> body -x, camera z -> body -z.
    pub fn camera_down() -> Self {
        Self::from_row_major([0.0, -1.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, -1.0])
    }

    /// Rotation about the world z axis.
    pub fn yaw(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_row_major([c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0])
    }

    /// Rotation about the x axis.
    pub fn roll(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_row_major([1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c])
    }

    /// Rotation about the y axis.
    pub fn pitch(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::from_row_major([c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c])
    }

    pub fn then(&self, outer: &Rotation) -> Rotation {
        Rotation(outer.0 * self.0)
    }

    pub fn validate(&self) -> Result<(), GeolocError> {
        let m = &self.0;
        let gram = m.transpose() * m - Matrix3::identity();
        let ortho = gram.iter().all(|v| v.abs() <= ORTHO_TOL);
        if ortho && (m.determinant() - 1.0).abs() <= ORTHO_TOL && m.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(GeolocError::InvalidRotation)
        }
    }
}

impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_row_major().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[f64; 9]>::deserialize(d).map(Rotation::from_row_major)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extrinsics {
    /// Camera frame to UAV body frame.
    pub r_uav_cam: Rotation,
}

/// Unit ray through pixel `(px, py)` in the camera frame. Pixel coordinates
/// are taken relative to the principal point.
pub fn pixel_ray(intr: &CameraIntrinsics, px: f64, py: f64) -> Vector3<f64> {
    Vector3::new(px - intr.cx_pp, py - intr.cy_pp, intr.f).normalize()
}

/// Rotates a camera-frame direction into the world frame:
/// `v_world = R_world_uav * R_uav_cam * v_cam`, renormalized.
pub fn ray_to_world(
    v_cam: &Vector3<f64>,
    ext: &Extrinsics,
    pose: &UavPose,
) -> Result<Vector3<f64>, GeolocError> {
    ext.r_uav_cam.validate()?;
    pose.r_lora_uav.validate()?;
    Ok((pose.r_lora_uav.0 * ext.r_uav_cam.0 * v_cam).normalize())
}

/// Intersects `origin + t * v` (t > 0) with the plane `z = h`.
pub fn intersect_plane(origin: &Vector3<f64>, v: &Vector3<f64>, h: f64) -> Result<(f64, f64), GeolocError> {
    if origin.z <= h {
        return Err(GeolocError::BelowPlane { z: origin.z, h });
    }
    if v.z >= -PARALLEL_EPS {
        return Err(GeolocError::NoIntersection { v_z: v.z });
    }
    let t = (h - origin.z) / v.z;
    Ok((origin.x + t * v.x, origin.y + t * v.y))
}

/// Full chain from a pixel to a world `(x, y)` on the plane `z = h`.
pub fn locate_target(
    intr: &CameraIntrinsics,
    ext: &Extrinsics,
    pose: &UavPose,
    px: f64,
    py: f64,
    h: f64,
) -> Result<(f64, f64), GeolocError> {
    let v = ray_to_world(&pixel_ray(intr, px, py), ext, pose)?;
    intersect_plane(&pose.position_vec(), &v, h)
}

/// Projects a world point into pixel coordinates; `None` when the point is
/// behind the camera.
pub fn project_point(
    intr: &CameraIntrinsics,
    ext: &Extrinsics,
    pose: &UavPose,
    world: &Vector3<f64>,
) -> Option<(f64, f64)> {
    let r_world_cam = pose.r_lora_uav.0 * ext.r_uav_cam.0;
    let p_cam = r_world_cam.transpose() * (world - pose.position_vec());
    if p_cam.z <= 0.0 {
        return None;
    }
    Some((
        intr.cx_pp + intr.f * p_cam.x / p_cam.z,
        intr.cy_pp + intr.f * p_cam.y / p_cam.z,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn pose_at(position: [f64; 3], r: Rotation) -> UavPose {
        UavPose {
            timestamp: 0.0,
            position,
            r_lora_uav: r,
        }
    }

    #[test]
    fn optical_axis_ray() {
        let intr = CameraIntrinsics::default();
        let v = pixel_ray(&intr, 320.0, 240.0);
        assert_eq!(v, Vector3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn forty_five_degree_ray() {
        let intr = CameraIntrinsics::default();
        let v = pixel_ray(&intr, 920.0, 240.0);
        assert!((v - Vector3::new(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!(pixel_ray(&intr, 100.0, 240.0).x < 0.0);
    }

    #[test]
    fn identity_rotations_pass_through() {
        let v = Vector3::new(0.3, -0.4, 0.5).normalize();
        let ext = Extrinsics { r_uav_cam: Rotation::identity() };
        let out = ray_to_world(&v, &ext, &pose_at([0.0; 3], Rotation::identity())).unwrap();
        assert!((out - v).norm() < 1e-15);
    }

    #[test]
    fn straight_down_composition() {
        let ext = Extrinsics { r_uav_cam: Rotation::camera_down() };
        let out = ray_to_world(&Vector3::z(), &ext, &pose_at([0.0; 3], Rotation::identity())).unwrap();
        assert!((out - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn invalid_rotation_rejected() {
        let ext = Extrinsics { r_uav_cam: Rotation::from_row_major([2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]) };
        let err = ray_to_world(&Vector3::z(), &ext, &pose_at([0.0; 3], Rotation::identity())).unwrap_err();
        assert_eq!(err, GeolocError::InvalidRotation);
        // Reflection: orthonormal but det -1.
        let refl = Rotation::from_row_major([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(refl.validate(), Err(GeolocError::InvalidRotation));
    }

    #[test]
    fn plane_examples() {
        let nadir = intersect_plane(&Vector3::new(10.0, 20.0, 100.0), &Vector3::new(0.0, 0.0, -1.0), 1.0).unwrap();
        assert_eq!(nadir, (10.0, 20.0));
        let v = Vector3::new(1.0, 0.0, -1.0).normalize();
        let (x, y) = intersect_plane(&Vector3::new(0.0, 0.0, 101.0), &v, 1.0).unwrap();
        assert!((x - 100.0).abs() < 1e-9 && y.abs() < 1e-12);
        assert!(matches!(
            intersect_plane(&Vector3::new(0.0, 0.0, 101.0), &Vector3::x(), 1.0),
            Err(GeolocError::NoIntersection { .. })
        ));
        assert!(matches!(
            intersect_plane(&Vector3::new(0.0, 0.0, 0.5), &Vector3::new(0.0, 0.0, -1.0), 1.0),
            Err(GeolocError::BelowPlane { .. })
        ));
    }

    #[test]
    fn projection_inverts_location() {
        let intr = CameraIntrinsics::default();
        let ext = Extrinsics { r_uav_cam: Rotation::camera_down() };
        let pose = pose_at([5.0, -3.0, 120.0], Rotation::yaw(0.7).then(&Rotation::roll(0.05)));
        let g = Vector3::new(20.0, 10.0, 1.0);
        let (px, py) = project_point(&intr, &ext, &pose, &g).unwrap();
        let (x, y) = locate_target(&intr, &ext, &pose, px, py, 1.0).unwrap();
        assert!((x - g.x).abs() < 1e-9 && (y - g.y).abs() < 1e-9);
    }

    #[test]
    fn rotation_serde_is_row_major() {
        let r = Rotation::camera_down();
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(json, "[0.0,-1.0,0.0,-1.0,0.0,0.0,0.0,0.0,-1.0]");
        assert_eq!(serde_json::from_str::<Rotation>(&json).unwrap(), r);
    }
}
