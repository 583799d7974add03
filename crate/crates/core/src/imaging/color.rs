use serde::{Deserialize, Serialize};

use super::{GrayImage, ImageBuffer};

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsvPixel {
    pub hue: f64,
    pub saturation: f64,
    pub value: f64,
}

/// Hexcone RGB to HSV. Achromatic pixels get hue 0.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> HsvPixel {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let value = max as f64 / 255.0;
    if max == min {
        return HsvPixel {
            hue: 0.0,
            saturation: 0.0,
            value,
        };
    }
    let delta = (max - min) as f64;
    let (rf, gf, bf) = (r as f64, g as f64, b as f64);
    let sector = if max == r {
        (gf - bf) / delta
    } else if max == g {
        (bf - rf) / delta + 2.0
    } else {
        (rf - gf) / delta + 4.0
    };
    let mut hue = 60.0 * sector;
    if hue < 0.0 {
        hue += 360.0;
    }
    if hue >= 360.0 {
        hue -= 360.0;
    }
    HsvPixel {
        hue,
        saturation: delta / max as f64,
        value,
    }
}

/// BT.601 luma, rounded half up.
#[inline]
pub(crate) fn luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb;
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

pub fn to_grayscale(img: &ImageBuffer) -> GrayImage {
    let data = img.pixels().iter().map(|&p| luma(p)).collect();
    GrayImage::new(img.width(), img.height(), data).expect("dimensions carried over")
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Inverse hexcone conversion, used only to check the forward path.
    pub(crate) fn hsv_to_rgb(p: HsvPixel) -> [u8; 3] {
        let c = p.value * p.saturation;
        let h = p.hue / 60.0;
        let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
        let (r1, g1, b1) = match h as u32 {
            0 => (c, x, 0.0),
            1 => (x, c, 0.0),
            2 => (0.0, c, x),
            3 => (0.0, x, c),
            4 => (x, 0.0, c),
            _ => (c, 0.0, x),
        };
        let m = p.value - c;
        let to8 = |v: f64| ((v + m) * 255.0).round().clamp(0.0, 255.0) as u8;
        [to8(r1), to8(g1), to8(b1)]
    }

    #[test]
    fn primaries() {
        let red = rgb_to_hsv(255, 0, 0);
        assert_eq!((red.hue, red.saturation, red.value), (0.0, 1.0, 1.0));
        let blue = rgb_to_hsv(0, 0, 255);
        assert_eq!((blue.hue, blue.saturation, blue.value), (240.0, 1.0, 1.0));
        let green = rgb_to_hsv(0, 255, 0);
        assert_eq!(green.hue, 120.0);
    }

    #[test]
    fn achromatic_hue_is_zero() {
        let gray = rgb_to_hsv(128, 128, 128);
        assert_eq!(gray.hue, 0.0);
        assert_eq!(gray.saturation, 0.0);
        assert!((gray.value - 128.0 / 255.0).abs() < 1e-12);
        assert!((gray.value - 0.502).abs() < 1e-3);
    }

    #[test]
    fn grayscale_values() {
        let white = ImageBuffer::filled(4, 3, [255, 255, 255]);
        assert!(to_grayscale(&white).data().iter().all(|&v| v == 255));
        let black = ImageBuffer::filled(4, 3, [0, 0, 0]);
        assert!(to_grayscale(&black).data().iter().all(|&v| v == 0));
        let red = ImageBuffer::filled(1, 1, [255, 0, 0]);
        assert_eq!(to_grayscale(&red).get(0, 0), 76);
    }

    proptest! {
        #[test]
        fn hsv_round_trip(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            let hsv = rgb_to_hsv(r, g, b);
            prop_assert!(hsv.hue >= 0.0 && hsv.hue < 360.0);
            prop_assert!((0.0..=1.0).contains(&hsv.saturation));
            if hsv.saturation > 0.0 {
                let back = hsv_to_rgb(hsv);
                for (a, b) in back.iter().zip([r, g, b]) {
                    prop_assert!((*a as i32 - b as i32).abs() <= 1, "{:?} vs {:?}", back, (r, g, b));
                }
            }
        }
    }
}
