use serde::{Deserialize, Serialize};

use super::color::rgb_to_hsv;
use super::{ImageBuffer, ImagingError, PixelMask};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramConfig {
    pub num_bins: usize,
    /// Pixels below this saturation carry no usable hue.
    pub chroma_floor: f64,
    pub min_pixels: u64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self {
            num_bins: 36,
            chroma_floor: 0.1,
            min_pixels: 50,
        }
    }
}

/// L1-normalized hue distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HueHistogram {
    pub bins: Vec<f64>,
    pub pixel_count: u64,
}

impl HueHistogram {
    /// Bin index for a hue in degrees.
    pub fn bin_of(hue: f64, num_bins: usize) -> usize {
        let width = 360.0 / num_bins as f64;
        ((hue / width).floor().max(0.0) as usize).min(num_bins - 1)
    }

    /// Builds a histogram from raw weights, normalizing them to unit mass.
    pub fn from_weights(weights: Vec<f64>, pixel_count: u64) -> Self {
        let total: f64 = weights.iter().sum();
        let bins = if total > 0.0 {
            weights.into_iter().map(|w| w / total).collect()
        } else {
            weights
        };
        Self { bins, pixel_count }
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        self.bins
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|&p| -p * p.log2())
            .sum()
    }
}

pub fn hue_histogram(
    img: &ImageBuffer,
    mask: &PixelMask,
    cfg: &HistogramConfig,
) -> Result<HueHistogram, ImagingError> {
    mask.check_dims(img.width(), img.height())?;
    let mut counts = vec![0u64; cfg.num_bins];
    let mut contributors = 0u64;
    for (&[r, g, b], &keep) in img.pixels().iter().zip(mask.bits()) {
        if !keep {
            continue;
        }
        let hsv = rgb_to_hsv(r, g, b);
        if hsv.saturation < cfg.chroma_floor {
            continue;
        }
        counts[HueHistogram::bin_of(hsv.hue, cfg.num_bins)] += 1;
        contributors += 1;
    }
    if contributors < cfg.min_pixels.max(1) {
        return Err(ImagingError::InsufficientPixels {
            found: contributors,
            required: cfg.min_pixels.max(1),
        });
    }
    Ok(HueHistogram::from_weights(
        counts.into_iter().map(|c| c as f64).collect(),
        contributors,
    ))
}

/// Bhattacharyya distance in Hellinger form,
/// `sqrt(1 - sum_i sqrt(a_i * b_i))`, on L1-normalized histograms.
pub fn bhattacharyya(a: &HueHistogram, b: &HueHistogram) -> Result<f64, ImagingError> {
    if a.len() != b.len() {
        return Err(ImagingError::BinMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let coeff: f64 = a
        .bins
        .iter()
        .zip(&b.bins)
        .map(|(&p, &q)| (p * q).sqrt())
        .sum();
    Ok((1.0 - coeff).max(0.0).sqrt().min(1.0))
}
