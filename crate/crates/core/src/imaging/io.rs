use std::path::Path;

use image::{DynamicImage, ImageFormat, RgbImage, RgbaImage};

use super::{ImageBuffer, ImagingError};

pub fn decode_png(bytes: &[u8]) -> Result<ImageBuffer, ImagingError> {
    let dynamic = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    Ok(from_dynamic(dynamic))
}

pub fn read_png(path: impl AsRef<Path>) -> Result<ImageBuffer, ImagingError> {
    let bytes = std::fs::read(path)?;
    decode_png(&bytes)
}

pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>, ImagingError> {
    let mut out = std::io::Cursor::new(Vec::new());
    to_dynamic(img).write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn write_png(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<(), ImagingError> {
    std::fs::write(path, encode_png(img)?)?;
    Ok(())
}

fn from_dynamic(dynamic: DynamicImage) -> ImageBuffer {
    let (w, h) = (dynamic.width(), dynamic.height());
    if dynamic.color().has_alpha() {
        let rgba = dynamic.to_rgba8();
        let mut pixels = Vec::with_capacity((w * h) as usize);
        let mut alpha = Vec::with_capacity((w * h) as usize);
        for p in rgba.pixels() {
            pixels.push([p[0], p[1], p[2]]);
            alpha.push(p[3]);
        }
        ImageBuffer::new(w, h, pixels)
            .and_then(|img| img.with_alpha(alpha))
            .expect("decoder dimensions are consistent")
    } else {
        let rgb = dynamic.to_rgb8();
        let pixels = rgb.pixels().map(|p| p.0).collect();
        ImageBuffer::new(w, h, pixels).expect("decoder dimensions are consistent")
    }
}

fn to_dynamic(img: &ImageBuffer) -> DynamicImage {
    match img.alpha() {
        Some(alpha) => {
            let raw = img
                .pixels()
                .iter()
                .zip(alpha)
                .flat_map(|(p, &a)| [p[0], p[1], p[2], a])
                .collect();
            DynamicImage::ImageRgba8(
                RgbaImage::from_raw(img.width(), img.height(), raw).expect("buffer size"),
            )
        }
        None => {
            let raw = img.pixels().iter().flatten().copied().collect();
            DynamicImage::ImageRgb8(
                RgbImage::from_raw(img.width(), img.height(), raw).expect("buffer size"),
            )
        }
    }
}
