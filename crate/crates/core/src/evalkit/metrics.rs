use serde::{Deserialize, Serialize};

use super::GroundTruthFrame;
use crate::identify::{CandidateReport, Verdict};
use crate::imaging::NormBox;

/// IoU thresholds 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

/// IoU of two corner boxes `[x0, y0, x1, y1]`.
pub fn iou_corners(a: [f64; 4], b: [f64; 4]) -> f64 {
    let iw = (a[2].min(b[2]) - a[0].max(b[0])).max(0.0);
    let ih = (a[3].min(b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let area = |r: [f64; 4]| (r[2] - r[0]).max(0.0) * (r[3] - r[1]).max(0.0);
    let union = area(a) + area(b) - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn iou(a: &NormBox, b: &NormBox) -> f64 {
    let (ax0, ay0, ax1, ay1) = a.corners();
    let (bx0, by0, bx1, by1) = b.corners();
    iou_corners([ax0, ay0, ax1, ay1], [bx0, by0, bx1, by1])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    pub bbox: NormBox,
    pub score: f64,
}

/// Result of one-to-one matching of detections to ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Matched ground-truth index per detection, in input order.
    pub matched_gt: Vec<Option<usize>>,
    pub false_negatives: usize,
}

impl MatchOutcome {
    pub fn true_positives(&self) -> usize {
        self.matched_gt.iter().filter(|m| m.is_some()).count()
    }

    pub fn false_positives(&self) -> usize {
        self.matched_gt.len() - self.true_positives()
    }
}

/// Greedy matching in descending score order (stable for equal scores).
/// Each detection takes the unmatched ground truth with the highest IoU at
/// or above `iou_thr`, lower ground-truth index on ties.
pub fn match_detections(dets: &[ScoredBox], gts: &[NormBox], iou_thr: f64) -> MatchOutcome {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| dets[b].score.total_cmp(&dets[a].score));
    let mut taken = vec![false; gts.len()];
    let mut matched_gt = vec![None; dets.len()];
    for d in order {
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in gts.iter().enumerate() {
            if taken[g] {
                continue;
            }
            let v = iou(&dets[d].bbox, gt);
            if v >= iou_thr && best.is_none_or(|(_, b)| v > b) {
                best = Some((g, v));
            }
        }
        if let Some((g, _)) = best {
            taken[g] = true;
            matched_gt[d] = Some(g);
        }
    }
    MatchOutcome {
        matched_gt,
        false_negatives: taken.iter().filter(|t| !**t).count(),
    }
}

/// All-point interpolated AP over `(score, is_tp)` pairs.
pub fn average_precision(flags: &[(f64, bool)], total_gt: usize) -> f64 {
    if total_gt == 0 {
        return if flags.is_empty() { 1.0 } else { 0.0 };
    }
    let mut sorted = flags.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut points = Vec::with_capacity(sorted.len());
    for &(_, is_tp) in &sorted {
        if is_tp {
            tp += 1;
        } else {
            fp += 1;
        }
        points.push((tp as f64 / total_gt as f64, tp as f64 / (tp + fp) as f64));
    }
    // Precision envelope from the right.
    for i in (0..points.len().saturating_sub(1)).rev() {
        points[i].1 = points[i].1.max(points[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// AP over all frames pooled, averaged over `thresholds`.
pub fn mean_ap(dets: &[Vec<ScoredBox>], gts: &[Vec<NormBox>], thresholds: &[f64]) -> f64 {
    assert_eq!(dets.len(), gts.len(), "one detection list per ground-truth frame");
    if thresholds.is_empty() {
        return 0.0;
    }
    let total_gt: usize = gts.iter().map(Vec::len).sum();
    let sum: f64 = thresholds
        .iter()
        .map(|&thr| {
            let mut flags = Vec::new();
            for (d, g) in dets.iter().zip(gts) {
                let m = match_detections(d, g, thr);
                flags.extend(d.iter().zip(&m.matched_gt).map(|(s, mg)| (s.score, mg.is_some())));
            }
            average_precision(&flags, total_gt)
        })
        .sum();
    sum / thresholds.len() as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    /// TP / (TP + FP), 1 when nothing was called a target.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// TP / (TP + FN), 1 when no target was visible.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentificationMetrics {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
}

/// Confusion counts over frames. Reports are matched to ground-truth boxes
/// at IoU 0.5; only matched reports count. A labeled target that no report
/// matches is a false negative.
pub fn identification_metrics(frames: &[(Vec<CandidateReport>, GroundTruthFrame)]) -> IdentificationMetrics {
    let mut c = ConfusionCounts::default();
    for (reports, gt) in frames {
        let dets: Vec<ScoredBox> = reports
            .iter()
            .map(|r| ScoredBox {
                bbox: r.detection.bbox(),
                score: r.detection.score,
            })
            .collect();
        let boxes: Vec<NormBox> = gt.boxes.iter().map(|b| b.bbox()).collect();
        let m = match_detections(&dets, &boxes, 0.5);
        let mut target_seen = false;
        for (r, mg) in reports.iter().zip(&m.matched_gt) {
            let Some(g) = *mg else { continue };
            let is_target = gt.target_index == Some(g);
            let called = r.verdict == Verdict::Target;
            match (is_target, called) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
            target_seen |= is_target;
        }
        if gt.target_index.is_some() && !target_seen {
            c.fn_ += 1;
        }
    }
    IdentificationMetrics {
        counts: c,
        precision: c.precision(),
        recall: c.recall(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::Detection;
    use crate::identify::CandidateReport;
    use proptest::prelude::*;

    fn sb(cx: f64, cy: f64, w: f64, h: f64, score: f64) -> ScoredBox {
        ScoredBox {
            bbox: NormBox::new(cx, cy, w, h),
            score,
        }
    }

    #[test]
    fn iou_examples() {
        assert_eq!(iou_corners([0.0, 0.0, 2.0, 2.0], [1.0, 0.0, 3.0, 2.0]), 1.0 / 3.0);
        let a = NormBox::new(0.5, 0.5, 0.2, 0.2);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &NormBox::new(0.1, 0.1, 0.1, 0.1)), 0.0);
    }

    #[test]
    fn matching_examples() {
        let gt = [NormBox::new(0.5, 0.5, 0.2, 0.2)];
        let m = match_detections(&[sb(0.5, 0.5, 0.2, 0.2, 0.9)], &gt, 0.5);
        assert_eq!((m.true_positives(), m.false_positives(), m.false_negatives), (1, 0, 0));

        let m = match_detections(&[sb(0.5, 0.5, 0.2, 0.2, 0.3), sb(0.5, 0.5, 0.2, 0.2, 0.9)], &gt, 0.5);
        assert_eq!(m.matched_gt, vec![None, Some(0)]);

        // Shifted by half a width: IoU 1/3.
        let m = match_detections(&[sb(0.6, 0.5, 0.2, 0.2, 0.9)], &gt, 0.5);
        assert!(iou(&NormBox::new(0.6, 0.5, 0.2, 0.2), &gt[0]) < 0.5);
        assert_eq!((m.false_positives(), m.false_negatives), (1, 1));
    }

    #[test]
    fn ties_prefer_lower_gt_index() {
        let gts = [NormBox::new(0.5, 0.5, 0.2, 0.2), NormBox::new(0.5, 0.5, 0.2, 0.2)];
        let m = match_detections(&[sb(0.5, 0.5, 0.2, 0.2, 0.9)], &gts, 0.5);
        assert_eq!(m.matched_gt, vec![Some(0)]);
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[(0.9, true)], 1), 1.0);
        assert_eq!(average_precision(&[], 1), 0.0);
        assert_eq!(average_precision(&[(0.9, true), (0.8, false)], 1), 1.0);
        assert_eq!(average_precision(&[(0.8, true), (0.9, false)], 1), 0.5);
        assert_eq!(average_precision(&[], 0), 1.0);
        assert_eq!(average_precision(&[(0.5, false)], 0), 0.0);
        // TP, FP, TP over 2 GT: P = 1, 1/2, 2/3 at R = 1/2, 1/2, 1.
        let ap = average_precision(&[(0.9, true), (0.8, false), (0.7, true)], 2);
        assert!((ap - (0.5 * 1.0 + 0.5 * 2.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn map_examples() {
        let gts = vec![vec![NormBox::new(0.3, 0.3, 0.2, 0.2)], vec![NormBox::new(0.6, 0.6, 0.1, 0.3)]];
        let perfect: Vec<Vec<ScoredBox>> = gts
            .iter()
            .map(|g| g.iter().map(|b| ScoredBox { bbox: *b, score: 1.0 }).collect())
            .collect();
        assert_eq!(mean_ap(&perfect, &gts, &[0.5]), 1.0);
        assert_eq!(mean_ap(&perfect, &gts, &coco_thresholds()), 1.0);
        assert_eq!(mean_ap(&[], &[], &coco_thresholds()), 1.0);

        // Width 0.2 shifted by 0.05 in x: IoU = 0.15 / 0.25 = 0.6.
        let gt = vec![vec![NormBox::new(0.5, 0.5, 0.2, 0.2)]];
        let shifted = vec![vec![sb(0.55, 0.5, 0.2, 0.2, 0.9)]];
        assert!((iou(&shifted[0][0].bbox, &gt[0][0]) - 0.6).abs() < 1e-9);
        assert_eq!(mean_ap(&shifted, &gt, &[0.5]), 1.0);
        assert_eq!(mean_ap(&shifted, &gt, &[0.65]), 0.0);
        let m = mean_ap(&shifted, &gt, &coco_thresholds());
        assert!(m > 0.0 && m < 1.0);
        // 0.50 and 0.55 pass, 0.60 sits on the floating-point boundary.
        assert!((0.2..=0.3).contains(&m), "{m}");
    }

    fn report(verdict: Verdict, det: Detection) -> CandidateReport {
        let mut r = CandidateReport::new(0, 0.0, 0, det);
        r.verdict = verdict;
        r
    }

    #[test]
    fn identification_counts() {
        let boxes = vec![Detection::new(0, 0.2, 0.2, 0.1, 0.1, 1.0), Detection::new(0, 0.7, 0.7, 0.1, 0.1, 1.0)];
        let gt = GroundTruthFrame {
            frame_id: 0,
            boxes: boxes.clone(),
            target_index: Some(0),
        };
        let frames = vec![
            (vec![report(Verdict::Target, boxes[0]), report(Verdict::NotTarget, boxes[1])], gt.clone()),
            (vec![report(Verdict::PossibleTarget, boxes[0]), report(Verdict::Target, boxes[1])], gt.clone()),
            (vec![], gt.clone()),
            // Unmatched Target verdict is not counted.
            (vec![report(Verdict::Target, Detection::new(0, 0.5, 0.5, 0.05, 0.05, 1.0))], GroundTruthFrame {
                frame_id: 3,
                boxes: vec![],
                target_index: None,
            }),
        ];
        let m = identification_metrics(&frames);
        assert_eq!(m.counts, ConfusionCounts { tp: 1, fp: 1, fn_: 2, tn: 1 });
        assert_eq!(m.precision, 0.5);
        assert!((m.recall - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn confusion_ratios() {
        let c = ConfusionCounts { tp: 90, fp: 10, fn_: 10, tn: 100 };
        assert_eq!((c.precision(), c.recall()), (0.9, 0.9));
        let c = ConfusionCounts { tp: 0, fp: 0, fn_: 10, tn: 20 };
        assert_eq!((c.precision(), c.recall()), (1.0, 0.0));
        assert_eq!(serde_json::to_value(c).unwrap()["fn"], 10);
    }

    fn arb_box() -> impl Strategy<Value = NormBox> {
        (0.05f64..0.95, 0.05f64..0.95, 0.01f64..0.4, 0.01f64..0.4).prop_map(|(cx, cy, w, h)| NormBox::new(cx, cy, w, h))
    }

    proptest! {
        #[test]
        fn iou_properties(a in arb_box(), b in arb_box()) {
            let v = iou(&a, &b);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, iou(&b, &a));
            prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn matching_is_one_to_one(
            dets in proptest::collection::vec((arb_box(), 0.0f64..1.0), 0..12),
            gts in proptest::collection::vec(arb_box(), 0..8),
            thr in 0.1f64..0.9,
        ) {
            let dets: Vec<_> = dets.into_iter().map(|(bbox, score)| ScoredBox { bbox, score }).collect();
            let m = match_detections(&dets, &gts, thr);
            let mut seen = std::collections::HashSet::new();
            for g in m.matched_gt.iter().flatten() {
                prop_assert!(seen.insert(*g));
            }
            prop_assert_eq!(m.true_positives() + m.false_negatives, gts.len());
        }

        #[test]
        fn ap_depends_on_order_only(
            flags in proptest::collection::vec((0.0f64..1.0, any::<bool>()), 0..20),
            extra in 0usize..5,
        ) {
            let total = flags.iter().filter(|f| f.1).count() + extra;
            let rescaled: Vec<_> = flags.iter().map(|&(s, t)| (s * 4.0, t)).collect();
            prop_assert_eq!(average_precision(&flags, total), average_precision(&rescaled, total));
        }

        #[test]
        fn single_threshold_is_map50(
            dets in proptest::collection::vec((arb_box(), 0.0f64..1.0), 0..6),
            gts in proptest::collection::vec(arb_box(), 0..4),
        ) {
            let dets = vec![dets.into_iter().map(|(bbox, score)| ScoredBox { bbox, score }).collect::<Vec<_>>()];
            let gts = vec![gts];
            let m = match_detections(&dets[0], &gts[0], 0.5);
            let flags: Vec<_> = dets[0].iter().zip(&m.matched_gt).map(|(d, g)| (d.score, g.is_some())).collect();
            prop_assert_eq!(mean_ap(&dets, &gts, &[0.5]), average_precision(&flags, gts[0].len()));
        }
    }
}
