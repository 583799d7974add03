use serde::{Deserialize, Serialize};

use super::color::rgb_to_hsv;
use super::{GrayImage, ImageBuffer, ImagingError};

/// Thresholds for classifying sea (blue) and white pixels as background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    /// Set when the target itself is blue or white.
    pub disabled: bool,
    pub blue_hue_lo: f64,
    pub blue_hue_hi: f64,
    pub blue_sat_min: f64,
    pub white_sat_max: f64,
    pub white_val_min: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        Self {
            disabled: false,
            blue_hue_lo: 180.0,
            blue_hue_hi: 260.0,
            blue_sat_min: 0.2,
            white_sat_max: 0.15,
            white_val_min: 0.7,
        }
    }
}

impl MaskConfig {
    pub fn is_background(&self, rgb: [u8; 3]) -> bool {
        let hsv = rgb_to_hsv(rgb[0], rgb[1], rgb[2]);
        let blue = hsv.hue >= self.blue_hue_lo
            && hsv.hue <= self.blue_hue_hi
            && hsv.saturation >= self.blue_sat_min;
        let white = hsv.saturation <= self.white_sat_max && hsv.value >= self.white_val_min;
        blue || white
    }
}

/// One bit per pixel; `true` means the pixel is retained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), (width as usize) * (height as usize));
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn all(width: u32, height: u32, value: bool) -> Self {
        Self::new(width, height, vec![value; (width as usize) * (height as usize)])
    }

    /// Mask of pixels with non-zero alpha; `None` if the image has no alpha.
    pub fn from_alpha(img: &ImageBuffer) -> Option<Self> {
        img.alpha()
            .map(|a| Self::new(img.width(), img.height(), a.iter().map(|&v| v > 0).collect()))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn retained(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn retained_ratio(&self) -> f64 {
        self.retained() as f64 / self.bits.len() as f64
    }

    pub(crate) fn check_dims(&self, width: u32, height: u32) -> Result<(), ImagingError> {
        if self.width != width || self.height != height {
            return Err(ImagingError::MaskMismatch {
                mask_w: self.width,
                mask_h: self.height,
                image_w: width,
                image_h: height,
            });
        }
        Ok(())
    }
}

/// Masks out sea-blue and white pixels. Returns the mask and the fraction
/// of pixels retained.
pub fn background_mask(img: &ImageBuffer, cfg: &MaskConfig) -> (PixelMask, f64) {
    let mask = if cfg.disabled {
        PixelMask::all(img.width(), img.height(), true)
    } else {
        let bits = img.pixels().iter().map(|&p| !cfg.is_background(p)).collect();
        PixelMask::new(img.width(), img.height(), bits)
    };
    let ratio = mask.retained_ratio();
    (mask, ratio)
}

/// Zeroes gray pixels that the mask removes.
pub fn apply_mask_to_gray(gray: &mut GrayImage, mask: &PixelMask) -> Result<(), ImagingError> {
    mask.check_dims(gray.width(), gray.height())?;
    for (v, &keep) in gray.data_mut().iter_mut().zip(mask.bits()) {
        if !keep {
            *v = 0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pure_blue_is_removed() {
        let img = ImageBuffer::filled(8, 8, [0, 0, 255]);
        let (_, ratio) = background_mask(&img, &MaskConfig::default());
        assert_eq!(ratio, 0.0);
    }

    #[test]
    fn pure_red_is_retained() {
        let img = ImageBuffer::filled(8, 8, [255, 0, 0]);
        let (_, ratio) = background_mask(&img, &MaskConfig::default());
        assert_eq!(ratio, 1.0);
    }

    #[test]
    fn half_blue_half_red() {
        let img = ImageBuffer::from_fn(10, 6, |x, _| if x < 5 { [0, 0, 255] } else { [255, 0, 0] });
        let (mask, ratio) = background_mask(&img, &MaskConfig::default());
        assert_eq!(ratio, 0.5);
        assert!(!mask.bits()[0] && mask.bits()[9]);
    }

    #[test]
    fn white_is_removed_and_gray_kept() {
        let cfg = MaskConfig::default();
        assert!(cfg.is_background([250, 250, 250]));
        assert!(!cfg.is_background([120, 120, 120]));
    }

    #[test]
    fn disabled_keeps_everything() {
        let img = ImageBuffer::filled(8, 8, [0, 0, 255]);
        let cfg = MaskConfig {
            disabled: true,
            ..MaskConfig::default()
        };
        let (mask, ratio) = background_mask(&img, &cfg);
        assert_eq!(ratio, 1.0);
        assert_eq!(mask.retained(), 64);
    }

    proptest! {
        #[test]
        fn ratio_matches_bit_count(seed in proptest::collection::vec(any::<[u8; 3]>(), 1..200)) {
            let w = seed.len() as u32;
            let img = ImageBuffer::new(w, 1, seed).unwrap();
            let (mask, ratio) = background_mask(&img, &MaskConfig::default());
            let mut kept = 0usize;
            for b in mask.bits() {
                if *b { kept += 1; }
            }
            prop_assert_eq!(ratio, kept as f64 / w as f64);
        }
    }
}
