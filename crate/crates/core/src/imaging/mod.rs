//! Pixel-level primitives: RGB/HSV/gray conversion, crop and upscale,
//! sea/white background masking, hue histograms and histogram distance.

mod color;
mod histogram;
mod io;
mod mask;
mod resample;

pub use color::{rgb_to_hsv, to_grayscale, HsvPixel};
pub use histogram::{bhattacharyya, hue_histogram, HistogramConfig, HueHistogram};
pub use io::{decode_png, encode_png, read_png, write_png};
pub use mask::{apply_mask_to_gray, background_mask, MaskConfig, PixelMask};
pub use resample::{crop_and_upscale, NormBox};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("invalid image dimensions {width}x{height} for {len} pixels")]
    InvalidDimensions { width: u32, height: u32, len: usize },
    #[error("crop has zero area")]
    EmptyCrop,
    #[error("InsufficientPixels: {found} contributing pixels, {required} required")]
    InsufficientPixels { found: u64, required: u64 },
    #[error("histogram bin mismatch: {left} vs {right}")]
    BinMismatch { left: usize, right: usize },
    #[error("mask is {mask_w}x{mask_h} but image is {image_w}x{image_h}")]
    MaskMismatch {
        mask_w: u32,
        mask_h: u32,
        image_w: u32,
        image_h: u32,
    },
    #[error("png: {0}")]
    Png(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major 8-bit RGB image with optional per-pixel alpha.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
    alpha: Option<Vec<u8>>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || pixels.len() != (width as usize) * (height as usize) {
            return Err(ImagingError::InvalidDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
            alpha: None,
        })
    }

    pub fn with_alpha(mut self, alpha: Vec<u8>) -> Result<Self, ImagingError> {
        if alpha.len() != self.pixels.len() {
            return Err(ImagingError::InvalidDimensions {
                width: self.width,
                height: self.height,
                len: alpha.len(),
            });
        }
        self.alpha = Some(alpha);
        Ok(self)
    }

    /// Image filled with a single color.
    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            pixels: vec![rgb; (width as usize) * (height as usize)],
            alpha: None,
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity((width as usize) * (height as usize));
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
            alpha: None,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[u8; 3]] {
        &mut self.pixels
    }

    pub fn alpha(&self) -> Option<&[u8]> {
        self.alpha.as_deref()
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        self.pixels[(y as usize) * (self.width as usize) + x as usize]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let w = self.width as usize;
        self.pixels[(y as usize) * w + x as usize] = rgb;
    }
}

/// Single-channel 8-bit image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 || data.len() != (width as usize) * (height as usize) {
            return Err(ImagingError::InvalidDimensions {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; (width as usize) * (height as usize)],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut data = Vec::with_capacity((width as usize) * (height as usize));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[(y as usize) * (self.width as usize) + x as usize]
    }

    /// Signed-coordinate access; the caller guarantees bounds.
    #[inline]
    pub(crate) fn at(&self, x: i32, y: i32) -> u8 {
        debug_assert!(x >= 0 && y >= 0 && (x as u32) < self.width && (y as u32) < self.height);
        self.data[(y as usize) * (self.width as usize) + x as usize]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.data[(y as usize) * w + x as usize] = v;
    }
}
