use serde::{Deserialize, Serialize};

use super::{frame_candidate, step, MissionAction, MissionEvent, MissionPolicy, MissionState};
use crate::geoloc::{locate_target, GeolocConfig, GeolocError, PoseBuffer, TargetFix, UavPose};
use crate::identify::CandidateReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SkipReason {
    NotTracking,
    Ineligible,
    NoPose,
    NoIntersection,
}

/// Counts of fixes that could not be produced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixDiagnostics {
    pub not_tracking: u64,
    pub ineligible: u64,
    pub no_pose: u64,
    pub no_intersection: u64,
}

impl FixDiagnostics {
    fn record(&mut self, reason: SkipReason) {
        match reason {
            SkipReason::NotTracking => self.not_tracking += 1,
            SkipReason::Ineligible => self.ineligible += 1,
            SkipReason::NoPose => self.no_pose += 1,
            SkipReason::NoIntersection => self.no_intersection += 1,
        }
    }
}

/// Geolocates `report` at its frame timestamp and appends the fix to the
/// state's fix list. Only tracking states accumulate.
pub fn accumulate_fix(
    state: &mut MissionState,
    report: &CandidateReport,
    poses: &PoseBuffer,
    cfg: &GeolocConfig,
    policy: &MissionPolicy,
    diag: &mut FixDiagnostics,
) -> Option<TargetFix> {
    let result = locate(state, report, poses, cfg, policy);
    match result {
        Ok(fix) => {
            if let MissionState::AwaitingConfirmation { fixes, .. } | MissionState::Confirmed { fixes, .. } = state {
                fixes.push(fix);
            }
            Some(fix)
        }
        Err(reason) => {
            log::debug!("frame {}: fix skipped ({reason:?})", report.frame_id);
            diag.record(reason);
            None
        }
    }
}

fn locate(
    state: &MissionState,
    report: &CandidateReport,
    poses: &PoseBuffer,
    cfg: &GeolocConfig,
    policy: &MissionPolicy,
) -> Result<TargetFix, SkipReason> {
    if !matches!(state, MissionState::AwaitingConfirmation { .. } | MissionState::Confirmed { .. }) {
        return Err(SkipReason::NotTracking);
    }
    if !policy.tracks(report.verdict) {
        return Err(SkipReason::Ineligible);
    }
    let pose: UavPose = poses
        .lookup(report.timestamp, cfg.sync_tol)
        .map_err(|_| SkipReason::NoPose)?;
    let intr = &cfg.intrinsics;
    let px = report.detection.cx * intr.width as f64;
    let py = report.detection.cy * intr.height as f64;
    let (x, y) = locate_target(intr, &cfg.extrinsics(), &pose, px, py, cfg.target_height).map_err(|e| match e {
        GeolocError::NoPose { .. } => SkipReason::NoPose,
        _ => SkipReason::NoIntersection,
    })?;
    Ok(TargetFix {
        timestamp: report.timestamp,
        frame_id: report.frame_id,
        x,
        y,
    })
}

/// Mission loop state: the machine plus pose history and fix diagnostics.
#[derive(Debug, Clone)]
pub struct MissionRunner {
    state: MissionState,
    policy: MissionPolicy,
    geoloc: GeolocConfig,
    poses: PoseBuffer,
    diagnostics: FixDiagnostics,
}

impl MissionRunner {
    pub fn new(policy: MissionPolicy, geoloc: GeolocConfig) -> Self {
        Self {
            state: MissionState::Idle,
            policy,
            geoloc,
            poses: PoseBuffer::new(),
            diagnostics: FixDiagnostics::default(),
        }
    }

    pub fn state(&self) -> &MissionState {
        &self.state
    }

    pub fn diagnostics(&self) -> &FixDiagnostics {
        &self.diagnostics
    }

    pub fn push_pose(&mut self, pose: UavPose) {
        self.poses.push(pose);
    }

    /// Applies one event. Frames that leave the machine tracking also
    /// produce a fix for the frame's candidate, reported as `EmitFix`.
    pub fn handle(&mut self, event: MissionEvent) -> Vec<MissionAction> {
        let reports = match &event {
            MissionEvent::FrameProcessed(r) => Some(r.clone()),
            _ => None,
        };
        let state = std::mem::replace(&mut self.state, MissionState::Idle);
        let (next, mut actions) = step(state, event, &self.policy);
        self.state = next;
        if let Some(reports) = reports {
            if let Some(candidate) = frame_candidate(&reports, &self.policy) {
                let fix = accumulate_fix(
                    &mut self.state,
                    candidate,
                    &self.poses,
                    &self.geoloc,
                    &self.policy,
                    &mut self.diagnostics,
                );
                actions.extend(fix.map(MissionAction::EmitFix));
            }
        }
        actions
    }
}
