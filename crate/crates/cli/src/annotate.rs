//! Draws detection boxes colored by verdict.

use vesselid_core::identify::CandidateReport;
use vesselid_core::{ImageBuffer, Verdict};

const THICKNESS: u32 = 2;

pub fn verdict_color(v: &Verdict) -> [u8; 3] {
    match v {
        Verdict::Target => [0, 220, 0],
        Verdict::PossibleTarget => [255, 200, 0],
        Verdict::NotTarget => [230, 0, 0],
        Verdict::Rejected(_) => [150, 150, 150],
    }
}

pub fn annotate(img: &mut ImageBuffer, reports: &[CandidateReport]) {
    // Targets last so they stay on top where boxes overlap.
    let mut order: Vec<&CandidateReport> = reports.iter().collect();
    order.sort_by_key(|r| r.verdict.rank());
    for r in order {
        draw_box(img, r, verdict_color(&r.verdict));
    }
}

fn draw_box(img: &mut ImageBuffer, r: &CandidateReport, rgb: [u8; 3]) {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 {
        return;
    }
    let (x0, y0, x1, y1) = r.detection.bbox().corners();
    let px = |v: f64, n: u32| ((v * n as f64).round().max(0.0) as u32).min(n - 1);
    let (x0, x1, y0, y1) = (px(x0, w), px(x1, w), px(y0, h), px(y1, h));
    for t in 0..THICKNESS {
        let (top, bottom) = ((y0 + t).min(y1), y1.saturating_sub(t).max(y0));
        let (left, right) = ((x0 + t).min(x1), x1.saturating_sub(t).max(x0));
        for x in x0..=x1 {
            img.put(x, top, rgb);
            img.put(x, bottom, rgb);
        }
        for y in y0..=y1 {
            img.put(left, y, rgb);
            img.put(right, y, rgb);
        }
    }
}
