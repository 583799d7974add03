//! ORB-style binary features: FAST-9 corners ranked by Harris response,
//! intensity-centroid orientation, steered 256-bit BRIEF descriptors, and
//! brute-force cross-checked Hamming matching.

mod descriptor;
mod fast;
mod matching;
mod orientation;
mod pattern;
mod vfset;

pub use descriptor::{compute_descriptor, gaussian_blur, pattern_extent};
pub use fast::{detect_keypoints, fast_segment_test, harris_response, FAST_CIRCLE};
pub use matching::{
    cross_check_matrix, hamming, match_cross_check, match_percentage, MatchPair,
};
pub use orientation::compute_orientation;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayImage;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("image {width}x{height} is smaller than the {min}x{min} minimum")]
    ImageTooSmall { width: u32, height: u32, min: u32 },
    #[error("descriptor pattern at ({x}, {y}) leaves the image")]
    PatternOutOfBounds { x: f32, y: f32 },
    #[error("candidate has no keypoints")]
    NoKeypoints,
    #[error("feature set encoding: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// FAST intensity threshold on the 0..=255 scale.
    pub fast_threshold: u8,
    pub max_keypoints: usize,
    pub patch_radius: u32,
    /// Hamming distance below which a cross-checked pair counts as a match.
    pub d_max: u32,
    /// Gaussian sigma applied before descriptor sampling; 0 disables.
    pub blur_sigma: f64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fast_threshold: 20,
            max_keypoints: 500,
            patch_radius: 15,
            d_max: 64,
            blur_sigma: 2.0,
        }
    }
}

impl FeatureConfig {
    /// Smallest side length accepted by [`detect_keypoints`].
    pub fn min_image_side(&self) -> u32 {
        2 * self.patch_radius + 7
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Harris corner score.
    pub response: f32,
    /// Radians in `[0, 2*pi)`.
    pub orientation: f32,
}

/// 256-bit binary descriptor, least significant bit of byte 0 first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryDescriptor(pub [u8; 32]);

impl BinaryDescriptor {
    pub const BITS: usize = 256;

    pub fn zero() -> Self {
        Self([0; 32])
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn set_bit(&mut self, i: usize, value: bool) {
        if value {
            self.0[i / 8] |= 1 << (i % 8);
        } else {
            self.0[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn complement(&self) -> Self {
        let mut out = self.0;
        out.iter_mut().for_each(|b| *b = !*b);
        Self(out)
    }
}

impl std::fmt::Debug for BinaryDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Keypoints with their parallel descriptors.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSet {
    keypoints: Vec<Keypoint>,
    descriptors: Vec<BinaryDescriptor>,
}

impl FeatureSet {
    pub fn new(keypoints: Vec<Keypoint>, descriptors: Vec<BinaryDescriptor>) -> Self {
        assert_eq!(keypoints.len(), descriptors.len(), "parallel lists");
        Self {
            keypoints,
            descriptors,
        }
    }

    pub fn keypoints(&self) -> &[Keypoint] {
        &self.keypoints
    }

    pub fn descriptors(&self) -> &[BinaryDescriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// Detect, orient and describe. Keypoints whose rotated sampling pattern
/// leaves the image are dropped together with their descriptors.
pub fn extract_features(gray: &GrayImage, cfg: &FeatureConfig) -> Result<FeatureSet, FeatureError> {
    let mut keypoints = detect_keypoints(gray, cfg)?;
    if keypoints.is_empty() {
        return Ok(FeatureSet::default());
    }
    let smoothed = if cfg.blur_sigma > 0.0 {
        gaussian_blur(gray, cfg.blur_sigma)
    } else {
        gray.clone()
    };
    for kp in &mut keypoints {
        kp.orientation = compute_orientation(gray, kp, cfg.patch_radius);
    }
    let (kept, descriptors): (Vec<_>, Vec<_>) = keypoints
        .into_iter()
        .filter_map(|kp| compute_descriptor(&smoothed, &kp).ok().map(|d| (kp, d)))
        .unzip();
    Ok(FeatureSet::new(kept, descriptors))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn checkerboard(size: u32, cell: u32) -> GrayImage {
        GrayImage::from_fn(size, size, |x, y| {
            if ((x / cell) + (y / cell)).is_multiple_of(2) {
                40
            } else {
                210
            }
        })
    }

    #[test]
    fn uniform_image_has_no_features() {
        let fs = extract_features(&GrayImage::filled(64, 64, 128), &FeatureConfig::default()).unwrap();
        assert!(fs.is_empty());
    }

    /// Checkerboard whose cells cycle through four gray levels, so that
    /// junctions have one quadrant contrasting with the other three.
    pub(crate) fn multilevel_checkerboard(size: u32, cell: u32) -> GrayImage {
        let levels = [40u8, 210, 120, 170];
        GrayImage::from_fn(size, size, |x, y| levels[(((x / cell) + 3 * (y / cell)) % 4) as usize])
    }

    #[test]
    fn checkerboard_has_features() {
        let img = multilevel_checkerboard(64, 8);
        let cfg = FeatureConfig::default();
        let fs = extract_features(&img, &cfg).unwrap();
        assert_eq!(fs.keypoints().len(), fs.descriptors().len());
        assert!(!fs.is_empty());
        // Every surviving keypoint passed the direct segment test.
        for kp in fs.keypoints() {
            assert!(fast_segment_test(&img, kp.x as i32, kp.y as i32, cfg.fast_threshold).is_some());
        }
    }

    #[test]
    fn extraction_is_deterministic() {
        let img = GrayImage::from_fn(96, 80, |x, y| ((x * 37 + y * 91 + (x * y) % 23) % 251) as u8);
        let cfg = FeatureConfig::default();
        let a = extract_features(&img, &cfg).unwrap();
        let b = extract_features(&img, &cfg).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }

    #[test]
    fn too_small_propagates() {
        let err = extract_features(&GrayImage::filled(20, 20, 0), &FeatureConfig::default()).unwrap_err();
        assert!(matches!(err, FeatureError::ImageTooSmall { .. }));
    }

    #[test]
    fn descriptor_bits() {
        let mut d = BinaryDescriptor::zero();
        d.set_bit(0, true);
        d.set_bit(255, true);
        assert!(d.bit(0) && d.bit(255) && !d.bit(1));
        assert_eq!(d.0[0], 1);
        assert_eq!(d.0[31], 0x80);
        d.set_bit(0, false);
        assert!(!d.bit(0));
    }
}
