use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GroundTruthFrame;
use crate::gateway::Detection;
use crate::imaging::{rgb_to_hsv, ImageBuffer};

/// One boat in image space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoatSpec {
    pub class_id: u32,
    pub hull_rgb: [u8; 3],
    /// Center in pixels.
    pub center: [f64; 2],
    /// Hull length and beam in pixels.
    pub length: f64,
    pub beam: f64,
    /// Bow direction in radians, measured from +x toward +y.
    pub heading: f64,
    /// Seeds the deck layout; boats with equal seeds share it.
    pub deck_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub frame_id: u64,
    pub width: u32,
    pub height: u32,
    /// Sea hue range in degrees.
    pub sea_hue: [f64; 2],
    pub boats: Vec<BoatSpec>,
    /// Index into `boats` of the target boat.
    pub target_index: Option<usize>,
    /// Uniform per-channel noise amplitude in 8-bit units.
    pub noise: f64,
    pub seed: u64,
}

/// Neutral deck tones: below the white-mask brightness and bright enough
/// that pixel noise keeps their saturation under the histogram floor.
const DECK_TONES: [u8; 6] = [62, 84, 106, 128, 150, 172];
const SUPERSAMPLE: u32 = 3;

#[derive(Debug, Clone, Copy)]
struct DeckBlock {
    a0: f64,
    a1: f64,
    b0: f64,
    b1: f64,
    tone: u8,
}

struct Deck {
    base: u8,
    blocks: Vec<DeckBlock>,
}

impl Deck {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = DECK_TONES[rng.random_range(2..4)];
        let n = rng.random_range(12..18);
        let blocks = (0..n)
            .map(|_| {
                let (la, lb) = (rng.random_range(0.04..0.14), rng.random_range(0.12..0.45));
                let a0 = rng.random_range(-0.42..0.18 - la);
                let b0 = rng.random_range(-0.34..0.34 - lb);
                let mut tone = DECK_TONES[rng.random_range(0..DECK_TONES.len())];
                if tone.abs_diff(base) < 40 {
                    tone = if base < 120 { DECK_TONES[5] } else { DECK_TONES[0] };
                }
                DeckBlock {
                    a0,
                    a1: a0 + la,
                    b0,
                    b1: b0 + lb,
                    tone,
                }
            })
            .collect();
        Self { base, blocks }
    }
}

/// Hull outline in units of (length, beam): square-ish stern, pointed bow.
fn hull_outline() -> Vec<(f64, f64)> {
    let mut side = vec![(-0.5, 0.42), (-0.47, 0.5), (0.12, 0.5)];
    for i in 1..=8 {
        let t = i as f64 / 8.0;
        side.push((0.12 + 0.38 * t, 0.5 * (1.0 - t * t)));
    }
    let mut poly = side.clone();
    poly.extend(side.iter().rev().skip(1).map(|&(a, b)| (a, -b)));
    poly
}

/// Box area of the hull outline at image heading `heading`, as a multiple
/// of length squared.
pub(crate) fn hull_box_unit(heading: f64, beam_ratio: f64) -> f64 {
    let (s, c) = heading.sin_cos();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (a, b) in hull_outline() {
        let b = b * beam_ratio;
        let (x, y) = (a * c - b * s, a * s + b * c);
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    (x1 - x0) * (y1 - y0)
}

fn inside_polygon(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (xi, yi) = poly[i];
        let (xj, yj) = poly[j];
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

struct BoatRenderer<'a> {
    spec: &'a BoatSpec,
    deck: Deck,
    outline: Vec<(f64, f64)>,
    cos: f64,
    sin: f64,
}

impl<'a> BoatRenderer<'a> {
    fn new(spec: &'a BoatSpec) -> Self {
        Self {
            spec,
            deck: Deck::new(spec.deck_seed),
            outline: hull_outline(),
            cos: spec.heading.cos(),
            sin: spec.heading.sin(),
        }
    }

    /// Boat-local normalized coordinates of an image point.
    fn local(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.spec.center[0], y - self.spec.center[1]);
        let u = dx * self.cos + dy * self.sin;
        let v = -dx * self.sin + dy * self.cos;
        (u / self.spec.length, v / self.spec.beam)
    }

    fn corners(&self) -> Vec<(f64, f64)> {
        self.outline
            .iter()
            .map(|&(a, b)| {
                let (u, v) = (a * self.spec.length, b * self.spec.beam);
                (
                    self.spec.center[0] + u * self.cos - v * self.sin,
                    self.spec.center[1] + u * self.sin + v * self.cos,
                )
            })
            .collect()
    }

    /// Exact pixel-space extent `(x0, y0, x1, y1)` of the hull.
    fn extent(&self) -> (f64, f64, f64, f64) {
        let c = self.corners();
        let fold = |f: fn(f64, f64) -> f64, init: f64, pick: fn(&(f64, f64)) -> f64| c.iter().map(pick).fold(init, f);
        (
            fold(f64::min, f64::INFINITY, |p| p.0),
            fold(f64::min, f64::INFINITY, |p| p.1),
            fold(f64::max, f64::NEG_INFINITY, |p| p.0),
            fold(f64::max, f64::NEG_INFINITY, |p| p.1),
        )
    }

    fn sample(&self, x: f64, y: f64) -> Option<[f64; 3]> {
        let (a, b) = self.local(x, y);
        if !inside_polygon(&self.outline, a, b) {
            return None;
        }
        let on_deck = (-0.44..0.22).contains(&a) && b.abs() < 0.36;
        if !on_deck {
            let [r, g, bl] = self.spec.hull_rgb;
            let paint = rgb_to_hsv(r, g, bl);
            // Weathered paint: smooth hue drift along the hull, darker toward
            // the gunwale.
            let drift = 9.0 * ((11.0 * a + 3.0 * b).sin() + 0.6 * (23.0 * a - 7.0 * b).sin()) / 1.6;
            let k = 1.0 - 0.25 * (2.0 * b.abs()).powi(4);
            return Some(hsv_rgb(paint.hue + drift, paint.saturation, paint.value * k));
        }
        let tone = self
            .deck
            .blocks
            .iter()
            .rev()
            .find(|blk| (blk.a0..blk.a1).contains(&a) && (blk.b0..blk.b1).contains(&b))
            .map_or(self.deck.base, |blk| blk.tone) as f64;
        Some([tone, tone, tone])
    }
}

pub(crate) fn hsv_rgb(h: f64, s: f64, v: f64) -> [f64; 3] {
    let c = v * s;
    let hp = (h.rem_euclid(360.0)) / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r, g, b) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) * 255.0, (g + m) * 255.0, (b + m) * 255.0]
}

/// Smooth value noise in [0, 1] on a coarse random lattice.
struct ValueNoise {
    cols: usize,
    cell: f64,
    lattice: Vec<f64>,
}

impl ValueNoise {
    fn new(width: u32, height: u32, cell: f64, rng: &mut ChaCha8Rng) -> Self {
        let cols = (width as f64 / cell).ceil() as usize + 2;
        let rows = (height as f64 / cell).ceil() as usize + 2;
        let lattice = (0..cols * rows).map(|_| rng.random::<f64>()).collect();
        Self { cols, cell, lattice }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = (x / self.cell, y / self.cell);
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (tx, ty) = (gx - ix as f64, gy - iy as f64);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let v = |i: usize, j: usize| self.lattice[j * self.cols + i];
        let top = v(ix, iy) + (v(ix + 1, iy) - v(ix, iy)) * s(tx);
        let bot = v(ix, iy + 1) + (v(ix + 1, iy + 1) - v(ix, iy + 1)) * s(tx);
        top + (bot - top) * s(ty)
    }
}

/// Renders a deterministic scene and its exact ground-truth boxes. Boats
/// whose box lies entirely outside the frame are left out of the ground
/// truth (and `target_index` is remapped).
pub fn generate_scene(spec: &SceneSpec) -> (ImageBuffer, GroundTruthFrame) {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (w, h) = (spec.width, spec.height);
    let hue_noise = ValueNoise::new(w, h, 48.0, &mut rng);
    let val_noise = ValueNoise::new(w, h, 17.0, &mut rng);
    let renderers: Vec<BoatRenderer> = spec.boats.iter().map(BoatRenderer::new).collect();
    let extents: Vec<_> = renderers.iter().map(BoatRenderer::extent).collect();

    let sea = |x: f64, y: f64| {
        let hue = spec.sea_hue[0] + (spec.sea_hue[1] - spec.sea_hue[0]) * hue_noise.at(x, y);
        hsv_rgb(hue, 0.62, 0.38 + 0.18 * val_noise.at(x, y))
    };

    let mut pixels = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let hit: Vec<usize> = extents
                .iter()
                .enumerate()
                .filter(|(_, e)| fx + 1.0 >= e.0 && fx <= e.2 && fy + 1.0 >= e.1 && fy <= e.3)
                .map(|(i, _)| i)
                .collect();
            let mut acc = [0.0f64; 3];
            if hit.is_empty() {
                acc = sea(fx + 0.5, fy + 0.5);
            } else {
                let n = SUPERSAMPLE;
                for sy in 0..n {
                    for sx in 0..n {
                        let (px, py) = (fx + (sx as f64 + 0.5) / n as f64, fy + (sy as f64 + 0.5) / n as f64);
                        let c = hit
                            .iter()
                            .rev()
                            .find_map(|&i| renderers[i].sample(px, py))
                            .unwrap_or_else(|| sea(px, py));
                        for k in 0..3 {
                            acc[k] += c[k] / (n * n) as f64;
                        }
                    }
                }
            }
            let mut px = [0u8; 3];
            for k in 0..3 {
                let noise = if spec.noise > 0.0 {
                    rng.random_range(-spec.noise..=spec.noise)
                } else {
                    0.0
                };
                px[k] = (acc[k] + noise).round().clamp(0.0, 255.0) as u8;
            }
            pixels.push(px);
        }
    }
    let image = ImageBuffer::new(w, h, pixels).expect("sized buffer");

    let mut boxes = Vec::new();
    let mut target_index = None;
    for (i, (boat, e)) in spec.boats.iter().zip(&extents).enumerate() {
        let x0 = e.0.max(0.0);
        let y0 = e.1.max(0.0);
        let x1 = e.2.min(w as f64);
        let y1 = e.3.min(h as f64);
        if x1 <= x0 || y1 <= y0 {
            continue;
        }
        if spec.target_index == Some(i) {
            target_index = Some(boxes.len());
        }
        boxes.push(Detection::new(
            boat.class_id,
            (x0 + x1) / 2.0 / w as f64,
            (y0 + y1) / 2.0 / h as f64,
            (x1 - x0) / w as f64,
            (y1 - y0) / h as f64,
            1.0,
        ));
    }
    let gt = GroundTruthFrame {
        frame_id: spec.frame_id,
        boxes,
        target_index,
    };
    (image, gt)
}

/// Pre-segmented cutout of a single boat: hull pixels opaque, everything
/// else transparent over a blue fill.
pub fn render_template(boat: &BoatSpec, margin: u32) -> ImageBuffer {
    let mut boat = boat.clone();
    let probe = BoatRenderer::new(&boat);
    let e = probe.extent();
    let w = (e.2 - e.0).ceil() as u32 + 2 * margin;
    let h = (e.3 - e.1).ceil() as u32 + 2 * margin;
    boat.center = [
        boat.center[0] - e.0 + margin as f64,
        boat.center[1] - e.1 + margin as f64,
    ];
    let r = BoatRenderer::new(&boat);
    let n = SUPERSAMPLE;
    let mut pixels = Vec::with_capacity((w * h) as usize);
    let mut alpha = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f64; 3];
            let mut hits = 0u32;
            for sy in 0..n {
                for sx in 0..n {
                    let px = x as f64 + (sx as f64 + 0.5) / n as f64;
                    let py = y as f64 + (sy as f64 + 0.5) / n as f64;
                    if let Some(c) = r.sample(px, py) {
                        hits += 1;
                        for k in 0..3 {
                            acc[k] += c[k];
                        }
                    }
                }
            }
            if 2 * hits >= n * n {
                pixels.push(acc.map(|v| (v / hits as f64).round().clamp(0.0, 255.0) as u8));
                alpha.push(255);
            } else {
                pixels.push([0, 0, 255]);
                alpha.push(0);
            }
        }
    }
    ImageBuffer::new(w, h, pixels)
        .and_then(|img| img.with_alpha(alpha))
        .expect("sized buffer")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::extract_features;
    use crate::imaging::{background_mask, to_grayscale, MaskConfig};

    pub(crate) fn boat(center: [f64; 2], hull: [u8; 3], deck_seed: u64) -> BoatSpec {
        BoatSpec {
            class_id: 0,
            hull_rgb: hull,
            center,
            length: 90.0,
            beam: 30.0,
            heading: 0.4,
            deck_seed,
        }
    }

    fn spec() -> SceneSpec {
        SceneSpec {
            frame_id: 4,
            width: 320,
            height: 240,
            sea_hue: [200.0, 225.0],
            boats: vec![
                boat([80.0, 70.0], [200, 50, 30], 1),
                boat([220.0, 80.0], [120, 128, 140], 2),
                boat([160.0, 180.0], [120, 128, 140], 1),
            ],
            target_index: Some(0),
            noise: 3.0,
            seed: 11,
        }
    }

    #[test]
    fn deterministic() {
        let (a, ga) = generate_scene(&spec());
        let (b, gb) = generate_scene(&spec());
        assert_eq!(a, b);
        assert_eq!(ga, gb);
        let mut other = spec();
        other.seed = 12;
        assert_ne!(generate_scene(&other).0, a);
    }

    #[test]
    fn ground_truth_boxes() {
        let (img, gt) = generate_scene(&spec());
        assert_eq!(gt.boxes.len(), 3);
        assert_eq!(gt.target_index, Some(0));
        assert_eq!(gt.frame_id, 4);
        // Box center sits on the hull; a far corner of the box is sea.
        let b = gt.boxes[0];
        let hsv = |x: f64, y: f64| {
            let p = img.get((x * 320.0) as u32, (y * 240.0) as u32);
            rgb_to_hsv(p[0], p[1], p[2])
        };
        assert!(!MaskConfig::default().is_background(img.get((b.cx * 320.0) as u32, (b.cy * 240.0) as u32)));
        assert!((180.0..=260.0).contains(&hsv(b.cx - b.w / 2.0 + 0.003, b.cy - b.h / 2.0 + 0.003).hue));
    }

    #[test]
    fn sea_is_masked() {
        let s = SceneSpec {
            boats: vec![],
            target_index: None,
            ..spec()
        };
        let (img, gt) = generate_scene(&s);
        assert!(gt.boxes.is_empty());
        let (_, retained) = background_mask(&img, &MaskConfig::default());
        assert!(retained < 0.01, "{retained}");
    }

    #[test]
    fn offscreen_boat_dropped() {
        let mut s = spec();
        s.boats.insert(0, boat([-300.0, 50.0], [200, 50, 30], 3));
        s.target_index = Some(1);
        let (_, gt) = generate_scene(&s);
        assert_eq!(gt.boxes.len(), 3);
        assert_eq!(gt.target_index, Some(0));
    }

    #[test]
    fn template_has_texture() {
        let t = render_template(&boat([0.0, 0.0], [200, 50, 30], 1), 4);
        let alpha = t.alpha().unwrap();
        let opaque = alpha.iter().filter(|&&a| a == 255).count();
        assert!(opaque > 1500 && opaque < alpha.len());
        assert_eq!(alpha[0], 0);
        let feats = extract_features(&to_grayscale(&t), &Default::default()).unwrap();
        assert!(feats.len() >= 10, "{}", feats.len());
    }
}
