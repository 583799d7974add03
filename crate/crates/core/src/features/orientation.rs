use std::f64::consts::TAU;

use super::Keypoint;
use crate::imaging::GrayImage;

/// Intensity-centroid orientation over the disc of radius `patch_radius`:
/// `atan2(m01, m10)` mapped to `[0, 2*pi)`, 0 when both moments vanish.
/// Image y grows downward, so a centroid below the keypoint gives `pi/2`.
pub fn compute_orientation(gray: &GrayImage, kp: &Keypoint, patch_radius: u32) -> f32 {
    let cx = kp.x.round() as i32;
    let cy = kp.y.round() as i32;
    let r = patch_radius as i32;
    let (w, h) = (gray.width() as i32, gray.height() as i32);
    let (mut m10, mut m01) = (0i64, 0i64);
    for v in -r..=r {
        let u_max = (((r * r - v * v) as f64).sqrt()).floor() as i32;
        let y = (cy + v).clamp(0, h - 1);
        for u in -u_max..=u_max {
            let x = (cx + u).clamp(0, w - 1);
            let i = gray.at(x, y) as i64;
            m10 += u as i64 * i;
            m01 += v as i64 * i;
        }
    }
    if m10 == 0 && m01 == 0 {
        return 0.0;
    }
    let mut theta = (m01 as f64).atan2(m10 as f64);
    if theta < 0.0 {
        theta += TAU;
    }
    // f32 rounding can land exactly on 2*pi.
    let t = theta as f32;
    if t >= std::f32::consts::TAU {
        0.0
    } else {
        t
    }
}
