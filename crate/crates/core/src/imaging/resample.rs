use serde::{Deserialize, Serialize};

use super::{ImageBuffer, ImagingError};

/// Axis-aligned box in normalized image coordinates (center + size).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl NormBox {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self { cx, cy, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Corners `(x0, y0, x1, y1)` in the same units as the box.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        (
            self.cx - self.w / 2.0,
            self.cy - self.h / 2.0,
            self.cx + self.w / 2.0,
            self.cy + self.h / 2.0,
        )
    }

    /// Integer pixel bounds `[x0, x1) x [y0, y1)`, clamped to the image.
    pub fn pixel_bounds(&self, width: u32, height: u32) -> (u32, u32, u32, u32) {
        let (x0, y0, x1, y1) = self.corners();
        let px = |v: f64, lim: u32| (v * lim as f64).round().clamp(0.0, lim as f64) as u32;
        (
            px(x0, width),
            px(y0, height),
            px(x1, width),
            px(y1, height),
        )
    }
}

/// Crops `bbox` out of `img` and, when the crop's shorter side is below
/// `min_side`, upscales it bilinearly by the smallest integer factor that
/// lifts the shorter side to at least `min_side`.
pub fn crop_and_upscale(
    img: &ImageBuffer,
    bbox: &NormBox,
    min_side: u32,
) -> Result<ImageBuffer, ImagingError> {
    let (x0, y0, x1, y1) = bbox.pixel_bounds(img.width(), img.height());
    if x1 <= x0 || y1 <= y0 {
        return Err(ImagingError::EmptyCrop);
    }
    let (cw, ch) = (x1 - x0, y1 - y0);
    let short = cw.min(ch);
    let factor = if short < min_side {
        min_side.div_ceil(short)
    } else {
        1
    };

    let crop_rgb = |x: u32, y: u32| img.get(x0 + x, y0 + y);
    let crop_alpha = img
        .alpha()
        .map(|a| move |x: u32, y: u32| a[((y0 + y) * img.width() + x0 + x) as usize]);

    if factor == 1 {
        let out = ImageBuffer::from_fn(cw, ch, crop_rgb);
        return Ok(match crop_alpha {
            Some(a) => {
                let alpha = (0..ch)
                    .flat_map(|y| (0..cw).map(move |x| (x, y)))
                    .map(|(x, y)| a(x, y))
                    .collect();
                out.with_alpha(alpha)?
            }
            None => out,
        });
    }

    let (ow, oh) = (cw * factor, ch * factor);
    // Source sample positions for each output column / row, pixel-center aligned.
    let taps = |n_out: u32, n_src: u32| -> Vec<(u32, u32, f64)> {
        (0..n_out)
            .map(|o| {
                let s = ((o as f64 + 0.5) / factor as f64 - 0.5).clamp(0.0, (n_src - 1) as f64);
                let i0 = s.floor() as u32;
                let i1 = (i0 + 1).min(n_src - 1);
                (i0, i1, s - i0 as f64)
            })
            .collect()
    };
    let xt = taps(ow, cw);
    let yt = taps(oh, ch);
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;

    let mut pixels = Vec::with_capacity((ow * oh) as usize);
    let mut alpha = crop_alpha.as_ref().map(|_| Vec::with_capacity((ow * oh) as usize));
    for &(ya, yb, ty) in &yt {
        for &(xa, xb, tx) in &xt {
            let (p00, p10, p01, p11) = (
                crop_rgb(xa, ya),
                crop_rgb(xb, ya),
                crop_rgb(xa, yb),
                crop_rgb(xb, yb),
            );
            let mut px = [0u8; 3];
            for c in 0..3 {
                let top = lerp(p00[c] as f64, p10[c] as f64, tx);
                let bot = lerp(p01[c] as f64, p11[c] as f64, tx);
                px[c] = lerp(top, bot, ty).round() as u8;
            }
            pixels.push(px);
            if let (Some(out), Some(a)) = (alpha.as_mut(), crop_alpha.as_ref()) {
                let top = lerp(a(xa, ya) as f64, a(xb, ya) as f64, tx);
                let bot = lerp(a(xa, yb) as f64, a(xb, yb) as f64, tx);
                out.push(lerp(top, bot, ty).round() as u8);
            }
        }
    }
    let out = ImageBuffer::new(ow, oh, pixels)?;
    match alpha {
        Some(a) => out.with_alpha(a),
        None => Ok(out),
    }
}
