use std::f64::consts::PI;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scene::{generate_scene, hull_box_unit, render_template, BoatSpec, SceneSpec};
use super::GroundTruthFrame;
use crate::geoloc::{project_point, CameraIntrinsics, Extrinsics, Rotation, UavPose};
use crate::imaging::ImageBuffer;

/// Parameters of a generated mission sequence: one target boat and any
/// number of decoys seen from a hovering UAV whose altitude sweeps so the
/// target's box area covers `area_range` of the frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SequenceSpec {
    pub frames: u32,
    pub seed: u64,
    pub frame_interval: f64,
    pub intrinsics: CameraIntrinsics,
    pub target_hull: [u8; 3],
    pub decoy_hulls: Vec<[u8; 3]>,
    /// Decoy positions relative to the target, meters.
    pub decoy_offsets: Vec<[f64; 2]>,
    /// Decoys at these indices share the target's deck layout.
    pub shared_deck: Vec<usize>,
    /// Target box area as a fraction of the frame, min and max.
    pub area_range: [f64; 2],
    pub boat_length_m: f64,
    pub beam_ratio: f64,
    /// Peak roll/pitch jitter in degrees.
    pub tilt_deg: f64,
    pub target_height: f64,
    pub noise: f64,
    /// Template hull lengths in pixels.
    pub template_lengths: [f64; 2],
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self {
            frames: 200,
            seed: 7,
            frame_interval: 0.1,
            intrinsics: CameraIntrinsics::default(),
            target_hull: [200, 50, 30],
            decoy_hulls: vec![[130, 145, 160], [142, 150, 162]],
            decoy_offsets: vec![[12.0, 4.0], [-11.0, -4.5]],
            shared_deck: vec![0],
            area_range: [0.002, 0.015],
            boat_length_m: 10.0,
            beam_ratio: 1.0 / 3.0,
            tilt_deg: 3.0,
            target_height: 1.0,
            noise: 3.0,
            template_lengths: [190.0, 160.0],
        }
    }
}

const TARGET_DECK: u64 = 0x7a6e;
const TARGET_HEADING: f64 = 0.35;
const DECOY_HEADINGS: [f64; 4] = [2.1, -1.2, 0.9, 2.8];

/// One rendered frame with its labels and the UAV pose at capture time.
#[derive(Debug, Clone)]
pub struct SequenceFrame {
    pub image: ImageBuffer,
    pub truth: GroundTruthFrame,
    pub pose: UavPose,
    /// The target's box area as a fraction of the frame, when visible.
    pub target_area: Option<f64>,
}

impl SequenceSpec {
    fn frame_rng(&self, frame: u32) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ (frame as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
    }

    /// Target area fraction for frame `i`: a geometric sweep up and down.
    fn area_at(&self, i: u32) -> f64 {
        let n = self.frames.max(2) as f64 - 1.0;
        let phase = i as f64 / n;
        let s = 1.0 - (2.0 * phase - 1.0).abs();
        let [lo, hi] = self.area_range;
        lo * (hi / lo).powf(s)
    }

    pub fn target_position(&self, t: f64) -> [f64; 2] {
        [0.4 * t, 0.15 * t]
    }

    pub fn extrinsics(&self) -> Extrinsics {
        Extrinsics {
            r_uav_cam: Rotation::camera_down(),
        }
    }

    /// Hull length in pixels giving box area `area` (fraction of the frame)
    /// for a boat at image heading `heading`.
    fn length_for_area(&self, area: f64, heading: f64) -> f64 {
        let pixels = area * self.intrinsics.width as f64 * self.intrinsics.height as f64;
        (pixels / hull_box_unit(heading, self.beam_ratio)).sqrt()
    }

    pub fn pose_at(&self, i: u32) -> UavPose {
        let mut rng = self.frame_rng(i);
        let t = i as f64 * self.frame_interval;
        let yaw = 0.25 * (t / 4.0).sin();
        let tilt = self.tilt_deg.to_radians();
        let roll = rng.random_range(-tilt..=tilt);
        let pitch = rng.random_range(-tilt..=tilt);
        let target = self.target_position(t);
        let drift = [1.5 * (t / 3.0).cos(), 1.0 * (t / 5.0).sin()];
        let mut pose = UavPose {
            timestamp: t,
            position: [target[0] + drift[0], target[1] + drift[1], 100.0],
            r_lora_uav: Rotation::roll(roll).then(&Rotation::pitch(pitch)).then(&Rotation::yaw(yaw)),
        };
        // The image heading barely depends on altitude, so one provisional
        // projection fixes it; then solve for the altitude giving the length.
        let heading = self
            .boat_in_image(&pose, target, TARGET_HEADING)
            .map_or(TARGET_HEADING - yaw, |b| b.1);
        let len_px = self.length_for_area(self.area_at(i), heading);
        pose.position[2] = self.intrinsics.f * self.boat_length_m / len_px + self.target_height;
        pose
    }

    fn boat_in_image(&self, pose: &UavPose, center: [f64; 2], heading: f64) -> Option<(f64, f64, [f64; 2], f64)> {
        let ext = self.extrinsics();
        let half = self.boat_length_m / 2.0;
        let dir = [heading.cos(), heading.sin()];
        let pt = |k: f64| Vector3::new(center[0] + k * dir[0], center[1] + k * dir[1], self.target_height);
        let bow = project_point(&self.intrinsics, &ext, pose, &pt(half))?;
        let stern = project_point(&self.intrinsics, &ext, pose, &pt(-half))?;
        let mid = project_point(&self.intrinsics, &ext, pose, &pt(0.0))?;
        let (dx, dy) = (bow.0 - stern.0, bow.1 - stern.1);
        let length = (dx * dx + dy * dy).sqrt();
        Some((length, dy.atan2(dx), [mid.0, mid.1], length * self.beam_ratio))
    }

    /// Renders frame `i`. Each frame depends only on the spec and `i`.
    pub fn frame(&self, i: u32) -> SequenceFrame {
        let pose = self.pose_at(i);
        let t = pose.timestamp;
        let target = self.target_position(t);
        let mut boats = Vec::new();
        let mut place = |pos: [f64; 2], heading: f64, hull: [u8; 3], deck: u64| {
            if let Some((length, img_heading, center, beam)) = self.boat_in_image(&pose, pos, heading) {
                boats.push(BoatSpec {
                    class_id: 0,
                    hull_rgb: hull,
                    center,
                    length,
                    beam,
                    heading: img_heading,
                    deck_seed: deck,
                });
                true
            } else {
                false
            }
        };
        let target_index = place(target, TARGET_HEADING, self.target_hull, TARGET_DECK).then_some(0);
        for (k, (hull, off)) in self.decoy_hulls.iter().zip(&self.decoy_offsets).enumerate() {
            let deck = if self.shared_deck.contains(&k) {
                TARGET_DECK
            } else {
                TARGET_DECK + 1 + k as u64
            };
            let pos = [target[0] + off[0], target[1] + off[1]];
            place(pos, DECOY_HEADINGS[k % DECOY_HEADINGS.len()], *hull, deck);
        }
        let spec = SceneSpec {
            frame_id: i as u64,
            width: self.intrinsics.width,
            height: self.intrinsics.height,
            sea_hue: [198.0, 226.0],
            boats,
            target_index,
            noise: self.noise,
            seed: self.frame_rng(i).random(),
        };
        let (image, truth) = generate_scene(&spec);
        let target_area = truth.target_index.map(|k| truth.boxes[k].area());
        SequenceFrame {
            image,
            truth,
            pose,
            target_area,
        }
    }

    /// The two pre-segmented target views used as templates.
    pub fn templates(&self) -> [ImageBuffer; 2] {
        let view = |length: f64, heading: f64| BoatSpec {
            class_id: 0,
            hull_rgb: self.target_hull,
            center: [0.0, 0.0],
            length,
            beam: length * self.beam_ratio,
            heading,
            deck_seed: TARGET_DECK,
        };
        [
            render_template(&view(self.template_lengths[0], 0.3), 6),
            render_template(&view(self.template_lengths[1], PI - 0.9), 6),
        ]
    }
}
