use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use vesselid_bench::harness;
use vesselid_core::features::{extract_features, match_cross_check};
use vesselid_core::geoloc::{locate_target, CameraIntrinsics, Extrinsics, Rotation};
use vesselid_core::identify::{assess_candidate, identify_frame};
use vesselid_core::imaging::{
    background_mask, bhattacharyya, crop_and_upscale, hue_histogram, to_grayscale, HistogramConfig, MaskConfig,
};
use vesselid_core::{FrameDetections, UavPose};

fn stages(c: &mut Criterion) {
    let (frame, templates, cfg) = harness(100);
    let k = frame.truth.target_index.expect("target in frame");
    let det = frame.truth.boxes[k];
    let crop = crop_and_upscale(&frame.image, &det.bbox(), cfg.min_side).unwrap();
    let (mask, _) = background_mask(&crop, &MaskConfig::default());
    let gray = to_grayscale(&crop);
    let feats = extract_features(&gray, &cfg.features).unwrap();
    let hist = hue_histogram(&crop, &mask, &HistogramConfig::default()).unwrap();

    let mut g = c.benchmark_group("stages");
    g.bench_function("crop_and_upscale", |b| {
        b.iter(|| crop_and_upscale(black_box(&frame.image), &det.bbox(), cfg.min_side).unwrap())
    });
    g.bench_function("background_mask", |b| b.iter(|| background_mask(black_box(&crop), &cfg.mask)));
    g.bench_function("extract_features", |b| {
        b.iter(|| extract_features(black_box(&gray), &cfg.features).unwrap())
    });
    g.bench_function("match_cross_check", |b| {
        b.iter(|| match_cross_check(black_box(&feats), &templates[0].features, cfg.features.d_max))
    });
    g.bench_function("hue_histogram", |b| {
        b.iter(|| hue_histogram(black_box(&crop), &mask, &cfg.histogram).unwrap())
    });
    g.bench_function("bhattacharyya", |b| {
        b.iter(|| bhattacharyya(black_box(&hist), &templates[0].histogram).unwrap())
    });
    g.finish();
}

fn candidate_and_frame(c: &mut Criterion) {
    let (frame, templates, cfg) = harness(100);
    let k = frame.truth.target_index.expect("target in frame");
    let dets = FrameDetections {
        frame_id: 100,
        timestamp: 10.0,
        detections: frame.truth.boxes.clone(),
    };
    c.bench_function("assess_candidate", |b| {
        b.iter(|| assess_candidate(black_box(&frame.image), &frame.truth.boxes[k], &templates, &cfg))
    });
    c.bench_function("identify_frame", |b| {
        b.iter(|| identify_frame(black_box(&frame.image), &dets, &templates, &cfg))
    });
}

fn geolocation(c: &mut Criterion) {
    let intr = CameraIntrinsics::default();
    let ext = Extrinsics {
        r_uav_cam: Rotation::camera_down(),
    };
    let pose = UavPose {
        timestamp: 0.0,
        position: [10.0, -4.0, 120.0],
        r_lora_uav: Rotation::yaw(0.3).then(&Rotation::roll(0.02)),
    };
    c.bench_function("locate_target", |b| {
        b.iter(|| locate_target(&intr, &ext, &pose, black_box(351.5), black_box(198.25), 1.0).unwrap())
    });
}

criterion_group!(benches, stages, candidate_and_frame, geolocation);
criterion_main!(benches);
