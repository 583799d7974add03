use super::{FeatureConfig, FeatureError, Keypoint};
use crate::imaging::GrayImage;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
pub const FAST_CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const ARC: usize = 9;
const HARRIS_K: f64 = 0.04;
const HARRIS_BLOCK: i32 = 7;

/// FAST-9 segment test at `(x, y)`. Returns the corner score (sum of
/// excess contrast over the qualifying side of the circle) or `None`.
/// The caller guarantees the circle lies inside the image.
pub fn fast_segment_test(img: &GrayImage, x: i32, y: i32, threshold: u8) -> Option<u32> {
    let c = img.at(x, y) as i32;
    let t = threshold as i32;
    let mut ring = [0i32; 16];
    for (v, (dx, dy)) in ring.iter_mut().zip(FAST_CIRCLE) {
        *v = img.at(x + dx, y + dy) as i32;
    }

    // Quick rejection on the compass points: a 9-arc covers at least two of them.
    let compass = [ring[0], ring[4], ring[8], ring[12]];
    let bright = compass.iter().filter(|&&p| p > c + t).count();
    let dark = compass.iter().filter(|&&p| p < c - t).count();
    if bright < 2 && dark < 2 {
        return None;
    }

    let has_arc = |pred: &dyn Fn(i32) -> bool| {
        let mut run = 0;
        for i in 0..16 + ARC - 1 {
            if pred(ring[i % 16]) {
                run += 1;
                if run >= ARC {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    };

    let mut score = None;
    if has_arc(&|p| p > c + t) {
        let s: i32 = ring.iter().filter(|&&p| p > c + t).map(|&p| p - c - t).sum();
        score = Some(s as u32);
    }
    if has_arc(&|p| p < c - t) {
        let s: i32 = ring.iter().filter(|&&p| p < c - t).map(|&p| c - t - p).sum();
        score = Some(score.map_or(s as u32, |prev: u32| prev.max(s as u32)));
    }
    score
}

/// Harris corner measure over a 7x7 block of Sobel gradients.
/// The caller guarantees a 4-pixel margin around `(x, y)`.
pub fn harris_response(img: &GrayImage, x: i32, y: i32) -> f64 {
    let half = HARRIS_BLOCK / 2;
    let (mut a, mut b, mut c) = (0.0f64, 0.0f64, 0.0f64);
    let scale = 1.0 / (4.0 * 255.0 * HARRIS_BLOCK as f64);
    for v in -half..=half {
        for u in -half..=half {
            let (px, py) = (x + u, y + v);
            let p = |dx: i32, dy: i32| img.at(px + dx, py + dy) as i32;
            let gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
            let (gx, gy) = (gx as f64 * scale, gy as f64 * scale);
            a += gx * gx;
            b += gy * gy;
            c += gx * gy;
        }
    }
    a * b - c * c - HARRIS_K * (a + b) * (a + b)
}

/// FAST-9 detection with 3x3 non-maximum suppression on the FAST score,
/// ranked by Harris response and truncated to `cfg.max_keypoints`.
/// Only pixels at least `patch_radius` from every border are considered.
pub fn detect_keypoints(gray: &GrayImage, cfg: &FeatureConfig) -> Result<Vec<Keypoint>, FeatureError> {
    let min = cfg.min_image_side();
    if gray.width() < min || gray.height() < min {
        return Err(FeatureError::ImageTooSmall {
            width: gray.width(),
            height: gray.height(),
            min,
        });
    }
    let (w, h) = (gray.width() as i32, gray.height() as i32);
    // Margin of at least 4 keeps the Harris block inside the image.
    let r = (cfg.patch_radius as i32).max(4);

    let mut scores = vec![0u32; (w * h) as usize];
    for y in r..h - r {
        for x in r..w - r {
            if let Some(s) = fast_segment_test(gray, x, y, cfg.fast_threshold) {
                // Shift by one so a zero-excess corner is distinguishable from "no corner".
                scores[(y * w + x) as usize] = s + 1;
            }
        }
    }

    let mut keypoints = Vec::new();
    for y in r..h - r {
        for x in r..w - r {
            let s = scores[(y * w + x) as usize];
            if s == 0 {
                continue;
            }
            // Ties resolve in favor of the first pixel in raster order.
            let mut is_max = true;
            'nms: for dy in -1..=1 {
                for dx in -1..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = scores[((y + dy) * w + x + dx) as usize];
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if n > s || (earlier && n == s) {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                keypoints.push(Keypoint {
                    x: x as f32,
                    y: y as f32,
                    response: harris_response(gray, x, y) as f32,
                    orientation: 0.0,
                });
            }
        }
    }

    keypoints.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.y.total_cmp(&b.y))
            .then(a.x.total_cmp(&b.x))
    });
    keypoints.truncate(cfg.max_keypoints);
    Ok(keypoints)
}
