use std::sync::OnceLock;

use super::pattern::ORB_PATTERN;
use super::{BinaryDescriptor, FeatureError, Keypoint};
use crate::imaging::GrayImage;

/// Number of discrete steering angles (12 degrees each).
pub const ANGLE_BUCKETS: usize = 30;

struct SteeredPattern {
    pairs: [[i32; 4]; 256],
    extent: i32,
}

fn steered_patterns() -> &'static [SteeredPattern] {
    static TABLE: OnceLock<Vec<SteeredPattern>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..ANGLE_BUCKETS)
            .map(|bucket| {
                let angle = bucket as f64 * std::f64::consts::TAU / ANGLE_BUCKETS as f64;
                let (s, c) = angle.sin_cos();
                let rot = |x: i8, y: i8| {
                    let (x, y) = (x as f64, y as f64);
                    ((c * x - s * y).round() as i32, (s * x + c * y).round() as i32)
                };
                let mut pairs = [[0i32; 4]; 256];
                let mut extent = 0;
                for (dst, src) in pairs.iter_mut().zip(ORB_PATTERN.iter()) {
                    let (x1, y1) = rot(src[0], src[1]);
                    let (x2, y2) = rot(src[2], src[3]);
                    *dst = [x1, y1, x2, y2];
                    extent = extent.max(dst.iter().map(|v| v.abs()).max().unwrap_or(0));
                }
                SteeredPattern { pairs, extent }
            })
            .collect()
    })
}

fn bucket_of(orientation: f32) -> usize {
    let step = std::f64::consts::TAU / ANGLE_BUCKETS as f64;
    ((orientation as f64 / step).round() as i64).rem_euclid(ANGLE_BUCKETS as i64) as usize
}

/// Largest coordinate offset used by the pattern steered to `orientation`.
pub fn pattern_extent(orientation: f32) -> u32 {
    steered_patterns()[bucket_of(orientation)].extent as u32
}

/// Steered BRIEF: 256 pixel-pair tests from the ORB sampling pattern, rotated
/// to the keypoint orientation (quantized to 12 degree steps).
/// Bit `i` is set iff `I(p_i) < I(q_i)`.
pub fn compute_descriptor(gray: &GrayImage, kp: &Keypoint) -> Result<BinaryDescriptor, FeatureError> {
    let pattern = &steered_patterns()[bucket_of(kp.orientation)];
    let (x, y) = (kp.x.round() as i32, kp.y.round() as i32);
    let e = pattern.extent;
    if x - e < 0 || y - e < 0 || x + e >= gray.width() as i32 || y + e >= gray.height() as i32 {
        return Err(FeatureError::PatternOutOfBounds { x: kp.x, y: kp.y });
    }
    let mut desc = BinaryDescriptor::zero();
    for (i, [x1, y1, x2, y2]) in pattern.pairs.iter().enumerate() {
        if gray.at(x + x1, y + y1) < gray.at(x + x2, y + y2) {
            desc.0[i / 8] |= 1 << (i % 8);
        }
    }
    Ok(desc)
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur(gray: &GrayImage, sigma: f64) -> GrayImage {
    let radius = (3.0 * sigma).ceil().max(1.0) as i32;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= norm);

    let (w, h) = (gray.width() as i32, gray.height() as i32);
    let mut tmp = vec![0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, weight) in kernel.iter().enumerate() {
                let sx = (x + k as i32 - radius).clamp(0, w - 1);
                acc += weight * gray.at(sx, y) as f64;
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    GrayImage::from_fn(gray.width(), gray.height(), |x, y| {
        let (x, y) = (x as i32, y as i32);
        let mut acc = 0.0;
        for (k, weight) in kernel.iter().enumerate() {
            let sy = (y + k as i32 - radius).clamp(0, h - 1);
            acc += weight * tmp[(sy * w + x) as usize];
        }
        acc.round().clamp(0.0, 255.0) as u8
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{compute_orientation, hamming};

    fn kp(x: f32, y: f32, orientation: f32) -> Keypoint {
        Keypoint {
            x,
            y,
            response: 0.0,
            orientation,
        }
    }

    fn textured(w: u32, h: u32) -> GrayImage {
        GrayImage::from_fn(w, h, |x, y| ((x * 37 + y * 91 + (x * y) % 23) % 251) as u8)
    }

    #[test]
    fn deterministic() {
        let img = textured(64, 64);
        let k = kp(32.0, 32.0, 1.0);
        let a = compute_descriptor(&img, &k).unwrap();
        let b = compute_descriptor(&img, &k).unwrap();
        assert_eq!(hamming(&a, &b), 0);
    }

    #[test]
    fn constant_patch_is_all_zero() {
        let img = GrayImage::filled(64, 64, 99);
        for theta in [0.0, 0.7, 3.0, 6.0] {
            assert_eq!(compute_descriptor(&img, &kp(32.0, 32.0, theta)).unwrap(), BinaryDescriptor::zero());
        }
    }

    #[test]
    fn out_of_bounds() {
        let img = textured(64, 64);
        let err = compute_descriptor(&img, &kp(5.0, 32.0, 0.0)).unwrap_err();
        assert!(matches!(err, FeatureError::PatternOutOfBounds { .. }));
    }

    #[test]
    fn unrotated_extent_is_thirteen() {
        assert_eq!(pattern_extent(0.0), 13);
        // Diagonal steering reaches further out.
        assert!(pattern_extent(std::f32::consts::FRAC_PI_4) > 13);
        assert!((0..ANGLE_BUCKETS).all(|b| steered_patterns()[b].extent <= 19));
    }

    #[test]
    fn bucket_quantization() {
        let step = std::f32::consts::TAU / 30.0;
        assert_eq!(bucket_of(0.0), 0);
        assert_eq!(bucket_of(step * 0.49), 0);
        assert_eq!(bucket_of(step * 0.51), 1);
        assert_eq!(bucket_of(std::f32::consts::TAU - 0.01), 0);
    }

    /// Asymmetric smooth blob field, quarter-turned in place.
    #[test]
    fn quarter_turn_steering() {
        let n = 65u32;
        let field = |x: f64, y: f64| {
            let blobs = [(8.0, 3.0, 5.0, 230.0), (-6.0, 7.0, 4.0, 160.0), (2.0, -9.0, 3.5, 120.0)];
            let v: f64 = 30.0
                + blobs
                    .iter()
                    .map(|&(bx, by, s, a)| a * (-((x - bx).powi(2) + (y - by).powi(2)) / (2.0 * s * s)).exp())
                    .sum::<f64>();
            v.min(255.0) as u8
        };
        let c = (n / 2) as f64;
        let img = GrayImage::from_fn(n, n, |x, y| field(x as f64 - c, y as f64 - c));
        // Content rotated by +90 degrees (y-down frame): new(x, y) = old(y, -x).
        let rot = GrayImage::from_fn(n, n, |x, y| field(y as f64 - c, -(x as f64 - c)));
        let k0 = kp(c as f32, c as f32, 0.0);
        let t0 = compute_orientation(&img, &k0, 15);
        let t1 = compute_orientation(&rot, &k0, 15);
        let diff = (t1 - t0 - std::f32::consts::FRAC_PI_2).rem_euclid(std::f32::consts::TAU);
        assert!(diff.min(std::f32::consts::TAU - diff) < 0.05, "{t0} {t1}");
        let d0 = compute_descriptor(&gaussian_blur(&img, 2.0), &kp(c as f32, c as f32, t0)).unwrap();
        let d1 = compute_descriptor(&gaussian_blur(&rot, 2.0), &kp(c as f32, c as f32, t1)).unwrap();
        assert!(hamming(&d0, &d1) <= 64, "hamming {}", hamming(&d0, &d1));
    }

    #[test]
    fn blur_preserves_constant() {
        let img = GrayImage::filled(10, 10, 123);
        assert_eq!(gaussian_blur(&img, 2.0), img);
    }
}
