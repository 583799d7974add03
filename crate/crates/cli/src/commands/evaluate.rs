use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vesselid_core::evalkit::{
    coco_thresholds, identification_metrics, load_ground_truth, mean_ap, IdentificationMetrics, ScoredBox,
};
use vesselid_core::gateway::parse_annotation_file;
use vesselid_core::identify::{load_template_bundle, CandidateReport};
use vesselid_core::GroundTruthFrame;

use crate::config::AppConfig;
use crate::error::CliError;
use crate::frames::{identify_all, open_dataset};

#[derive(Debug, clap::Args)]
#[command(group(clap::ArgGroup::new("source").required(true).multiple(true).args(["predictions", "detections", "templates"])))]
pub struct Args {
    /// Labeled dataset (labels/ and targets/).
    #[arg(long)]
    dataset: PathBuf,

    /// NDJSON candidate reports, as written by `identify`.
    #[arg(long, conflicts_with = "templates")]
    predictions: Option<PathBuf>,

    /// Directory of scored detector outputs (NNNNNN.txt) used for mAP
    /// instead of the report detections.
    #[arg(long)]
    detections: Option<PathBuf>,

    /// Run the identification pipeline live with this template bundle.
    #[arg(long)]
    templates: Option<PathBuf>,

    /// Write the JSON report here; `-` prints it instead of the table.
    #[arg(long, value_name = "PATH")]
    json: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct DetectionMetrics {
    pub map50: f64,
    pub map50_95: f64,
}

#[derive(Debug, Serialize)]
pub struct MetricsReport {
    pub frames: usize,
    pub ground_truth_boxes: usize,
    pub target_frames: usize,
    pub detection: Option<DetectionMetrics>,
    pub identification: Option<IdentificationMetrics>,
}

pub fn run(args: Args, cfg: &AppConfig) -> Result<(), CliError> {
    let gt = load_ground_truth(&args.dataset)?;

    let reports: Option<BTreeMap<u64, Vec<CandidateReport>>> = if let Some(p) = &args.predictions {
        Some(read_reports(p)?)
    } else if let Some(t) = &args.templates {
        Some(live_reports(&args.dataset, t, cfg)?)
    } else {
        None
    };

    let detections: Option<BTreeMap<u64, Vec<ScoredBox>>> = if let Some(dir) = &args.detections {
        Some(read_detection_dir(dir, &gt)?)
    } else {
        reports.as_ref().map(|r| {
            r.iter()
                .map(|(id, rs)| {
                    let boxes = rs
                        .iter()
                        .map(|r| ScoredBox {
                            bbox: r.detection.bbox(),
                            score: r.detection.score,
                        })
                        .collect();
                    (*id, boxes)
                })
                .collect()
        })
    };

    let report = compute(&gt, detections.as_ref(), reports.as_ref());
    let json = serde_json::to_string_pretty(&report).expect("plain struct");
    match args.json.as_deref() {
        Some(p) if p == Path::new("-") => println!("{json}"),
        Some(p) => {
            std::fs::write(p, json + "\n")?;
            print!("{}", table(&report));
        }
        None => print!("{}", table(&report)),
    }
    Ok(())
}

pub fn compute(
    gt: &[GroundTruthFrame],
    detections: Option<&BTreeMap<u64, Vec<ScoredBox>>>,
    reports: Option<&BTreeMap<u64, Vec<CandidateReport>>>,
) -> MetricsReport {
    let detection = detections.map(|dets| {
        let per_frame: Vec<Vec<ScoredBox>> = gt
            .iter()
            .map(|g| dets.get(&g.frame_id).cloned().unwrap_or_default())
            .collect();
        let gts: Vec<Vec<_>> = gt.iter().map(|g| g.boxes.iter().map(|b| b.bbox()).collect()).collect();
        DetectionMetrics {
            map50: mean_ap(&per_frame, &gts, &[0.5]),
            map50_95: mean_ap(&per_frame, &gts, &coco_thresholds()),
        }
    });
    let identification = reports.map(|reps| {
        let frames: Vec<(Vec<CandidateReport>, GroundTruthFrame)> = gt
            .iter()
            .map(|g| (reps.get(&g.frame_id).cloned().unwrap_or_default(), g.clone()))
            .collect();
        identification_metrics(&frames)
    });
    MetricsReport {
        frames: gt.len(),
        ground_truth_boxes: gt.iter().map(|g| g.boxes.len()).sum(),
        target_frames: gt.iter().filter(|g| g.target_index.is_some()).count(),
        detection,
        identification,
    }
}

fn table(r: &MetricsReport) -> String {
    let mut rows: Vec<(&str, String)> = vec![
        ("frames", r.frames.to_string()),
        ("ground truth boxes", r.ground_truth_boxes.to_string()),
        ("target frames", r.target_frames.to_string()),
    ];
    if let Some(d) = &r.detection {
        rows.push(("mAP50", format!("{:.4}", d.map50)));
        rows.push(("mAP50:95", format!("{:.4}", d.map50_95)));
    }
    if let Some(m) = &r.identification {
        rows.push(("target TP", m.counts.tp.to_string()));
        rows.push(("target FP", m.counts.fp.to_string()));
        rows.push(("target FN", m.counts.fn_.to_string()));
        rows.push(("target TN", m.counts.tn.to_string()));
        rows.push(("precision", format!("{:.4}", m.precision)));
        rows.push(("recall", format!("{:.4}", m.recall)));
    }
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let vwidth = rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v:>vwidth$}\n"))
        .collect()
}

fn read_reports(path: &Path) -> Result<BTreeMap<u64, Vec<CandidateReport>>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut out: BTreeMap<u64, Vec<CandidateReport>> = BTreeMap::new();
    for (n, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: CandidateReport = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{}:{}: {e}", path.display(), n + 1)))?;
        out.entry(r.frame_id).or_default().push(r);
    }
    Ok(out)
}

fn live_reports(dataset: &Path, templates: &Path, cfg: &AppConfig) -> Result<BTreeMap<u64, Vec<CandidateReport>>, CliError> {
    let id_cfg = cfg.identify_config();
    let templates = load_template_bundle(templates, &id_cfg)?;
    let mut out = BTreeMap::new();
    identify_all(open_dataset(dataset, None)?, &templates, &id_cfg, |rf, assessed| {
        out.insert(rf.frame.frame_id, assessed.into_iter().map(|a| a.report).collect());
        Ok(())
    })?;
    Ok(out)
}

/// Scored detections per frame, read for every ground-truth frame. A
/// missing file means the detector reported nothing.
fn read_detection_dir(dir: &Path, gt: &[GroundTruthFrame]) -> Result<BTreeMap<u64, Vec<ScoredBox>>, CliError> {
    let mut out = BTreeMap::new();
    for g in gt {
        let path = dir.join(format!("{:06}.txt", g.frame_id));
        let dets = match std::fs::read_to_string(&path) {
            Ok(text) => parse_annotation_file(&text, &path.display().to_string())?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(e.into()),
        };
        let boxes = dets
            .iter()
            .map(|d| ScoredBox {
                bbox: d.bbox(),
                score: d.score,
            })
            .collect();
        out.insert(g.frame_id, boxes);
    }
    Ok(out)
}
