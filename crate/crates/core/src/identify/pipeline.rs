use rayon::prelude::*;

use super::{classify_strength, decide, CandidateReport, IdentifyConfig, RejectReason, TemplateModel, Verdict};
use crate::features::{extract_features, match_cross_check};
use crate::gateway::{Detection, FrameDetections};
use crate::imaging::{
    apply_mask_to_gray, background_mask, bhattacharyya, crop_and_upscale, hue_histogram, to_grayscale,
    ImageBuffer,
};

/// A report together with the (possibly upscaled) crop it was computed on.
#[derive(Debug, Clone)]
pub struct AssessedCandidate {
    pub report: CandidateReport,
    pub crop: Option<ImageBuffer>,
}

/// Runs the full identification pipeline on one detection. Failures inside
/// the pipeline become `Rejected` verdicts. The returned report has
/// `frame_id`, `timestamp` and `index` zeroed; [`identify_frame`] fills them.
pub fn assess_candidate(
    frame: &ImageBuffer,
    det: &Detection,
    templates: &[TemplateModel; 2],
    cfg: &IdentifyConfig,
) -> AssessedCandidate {
    let mut report = CandidateReport::new(0, 0.0, 0, *det);
    let reject = |mut report: CandidateReport, reason, crop| {
        report.verdict = Verdict::Rejected(reason);
        AssessedCandidate { report, crop }
    };

    let crop = match crop_and_upscale(frame, &det.bbox(), cfg.min_side) {
        Ok(c) => c,
        Err(_) => return reject(report, RejectReason::TooFewPixels, None),
    };
    let (mask, retained) = background_mask(&crop, &cfg.mask);
    report.retained_ratio = Some(retained);
    if 1.0 - retained > cfg.p_max {
        return reject(report, RejectReason::TooFewPixels, Some(crop));
    }

    let mut gray = to_grayscale(&crop);
    apply_mask_to_gray(&mut gray, &mask).expect("mask built from this crop");
    let features = match extract_features(&gray, &cfg.features) {
        Ok(f) if !f.is_empty() => f,
        _ => return reject(report, RejectReason::NoFeatures, Some(crop)),
    };
    report.keypoints = Some(features.len());

    let n1 = match_cross_check(&templates[0].features, &features, cfg.features.d_max).len();
    let n2 = match_cross_check(&templates[1].features, &features, cfg.features.d_max).len();
    let (p_m1, p_m2) = (n1 as f64 / features.len() as f64, n2 as f64 / features.len() as f64);
    report.matches1 = Some(n1);
    report.matches2 = Some(n2);
    report.p_m1 = Some(p_m1);
    report.p_m2 = Some(p_m2);
    if n1 < cfg.min_matches && n2 < cfg.min_matches {
        return reject(report, RejectReason::TooFewMatches, Some(crop));
    }

    let hist = match hue_histogram(&crop, &mask, &cfg.histogram) {
        Ok(h) => h,
        Err(_) => return reject(report, RejectReason::TooFewPixels, Some(crop)),
    };
    let distance = |t: &TemplateModel| {
        bhattacharyya(&hist, &t.histogram).unwrap_or_else(|e| {
            log::warn!("template {}: {e}; treating as maximal distance", t.template_id);
            1.0
        })
    };
    let (d1, d2) = (distance(&templates[0]), distance(&templates[1]));
    let d_hist = d1.max(d2);
    let strength = classify_strength(p_m1, p_m2, cfg);
    let passed = n1 >= cfg.min_matches && n2 >= cfg.min_matches;
    report.d1 = Some(d1);
    report.d2 = Some(d2);
    report.d_hist = Some(d_hist);
    report.strength = Some(strength);
    report.verdict = decide(strength, d_hist, passed, cfg);
    AssessedCandidate {
        report,
        crop: Some(crop),
    }
}

/// Area-filters the frame's detections and assesses the survivors in
/// parallel. Reports keep input order. If several candidates come out as
/// Target, only the one with the smallest `d_hist` keeps it; the rest become
/// PossibleTarget.
pub fn identify_frame_with_crops(
    frame: &ImageBuffer,
    dets: &FrameDetections,
    templates: &[TemplateModel; 2],
    cfg: &IdentifyConfig,
) -> Vec<AssessedCandidate> {
    let survivors: Vec<(usize, &Detection)> = dets
        .detections
        .iter()
        .enumerate()
        .filter(|(_, d)| cfg.area.accepts(d))
        .collect();
    let mut out: Vec<AssessedCandidate> = survivors
        .par_iter()
        .map(|&(index, det)| {
            let mut a = assess_candidate(frame, det, templates, cfg);
            a.report.frame_id = dets.frame_id;
            a.report.timestamp = dets.timestamp;
            a.report.index = index;
            a.report.candidate_id = CandidateReport::candidate_id_for(dets.frame_id, index);
            a
        })
        .collect();

    let best = out
        .iter()
        .enumerate()
        .filter(|(_, a)| a.report.verdict == Verdict::Target)
        .min_by(|(_, a), (_, b)| {
            let (da, db) = (a.report.d_hist.unwrap_or(1.0), b.report.d_hist.unwrap_or(1.0));
            da.total_cmp(&db)
        })
        .map(|(i, _)| i);
    for (i, a) in out.iter_mut().enumerate() {
        if a.report.verdict == Verdict::Target && Some(i) != best {
            a.report.verdict = Verdict::PossibleTarget;
        }
    }
    out
}

pub fn identify_frame(
    frame: &ImageBuffer,
    dets: &FrameDetections,
    templates: &[TemplateModel; 2],
    cfg: &IdentifyConfig,
) -> Vec<CandidateReport> {
    identify_frame_with_crops(frame, dets, templates, cfg)
        .into_iter()
        .map(|a| a.report)
        .collect()
}
