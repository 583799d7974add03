//! Search mission state machine. [`step`] is a pure transition function;
//! [`MissionRunner`] wraps it with fix accumulation and performs no I/O.

mod runner;

pub use runner::{accumulate_fix, FixDiagnostics, MissionRunner, SkipReason};

use serde::{Deserialize, Serialize};

use crate::geoloc::{aggregate_fixes, FixAggregate, TargetFix};
use crate::identify::{CandidateReport, Verdict};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state")]
pub enum MissionState {
    Idle,
    Search,
    AwaitingConfirmation {
        pending: CandidateReport,
        fixes: Vec<TargetFix>,
    },
    Confirmed {
        candidate: CandidateReport,
        fixes: Vec<TargetFix>,
    },
}

impl MissionState {
    pub fn name(&self) -> &'static str {
        match self {
            MissionState::Idle => "Idle",
            MissionState::Search => "Search",
            MissionState::AwaitingConfirmation { .. } => "AwaitingConfirmation",
            MissionState::Confirmed { .. } => "Confirmed",
        }
    }

    pub fn fixes(&self) -> &[TargetFix] {
        match self {
            MissionState::AwaitingConfirmation { fixes, .. } | MissionState::Confirmed { fixes, .. } => fixes,
            _ => &[],
        }
    }

    /// `None` outside the tracking states or before the first fix.
    pub fn aggregate(&self) -> Option<FixAggregate> {
        aggregate_fixes(self.fixes()).ok()
    }

    pub fn pending(&self) -> Option<&CandidateReport> {
        match self {
            MissionState::AwaitingConfirmation { pending, .. } => Some(pending),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MissionEvent {
    StartSearch,
    FrameProcessed(Vec<CandidateReport>),
    OperatorConfirm,
    OperatorReject,
    Abort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MissionAction {
    NotifyOperator(CandidateReport),
    EmitFix(TargetFix),
    NotifyUsv {
        candidate_id: String,
        aggregate: Option<FixAggregate>,
    },
    ResetFlags,
    None,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionPolicy {
    /// Also ask the operator about PossibleTarget candidates.
    pub notify_on_possible: bool,
}

impl MissionPolicy {
    pub fn tracks(&self, verdict: Verdict) -> bool {
        verdict == Verdict::Target || (self.notify_on_possible && verdict == Verdict::PossibleTarget)
    }
}

/// The candidate a frame puts forward: its Target, or under the
/// notify-on-possible policy the PossibleTarget with the smallest distance.
pub(crate) fn frame_candidate<'a>(reports: &'a [CandidateReport], policy: &MissionPolicy) -> Option<&'a CandidateReport> {
    reports
        .iter()
        .find(|r| r.verdict == Verdict::Target)
        .or_else(|| {
            reports
                .iter()
                .filter(|r| policy.tracks(r.verdict))
                .min_by(|a, b| a.d_hist.unwrap_or(1.0).total_cmp(&b.d_hist.unwrap_or(1.0)))
        })
}

/// One transition. Invalid (state, event) pairs leave the state unchanged
/// and yield `[MissionAction::None]`.
pub fn step(state: MissionState, event: MissionEvent, policy: &MissionPolicy) -> (MissionState, Vec<MissionAction>) {
    use MissionEvent as E;
    use MissionState as S;
    match (state, event) {
        (_, E::Abort) => (S::Idle, vec![]),
        (S::Idle, E::StartSearch) => (S::Search, vec![]),
        (S::Search, E::FrameProcessed(reports)) => match frame_candidate(&reports, policy) {
            Some(r) => (
                S::AwaitingConfirmation {
                    pending: r.clone(),
                    fixes: vec![],
                },
                vec![MissionAction::NotifyOperator(r.clone())],
            ),
            None => (S::Search, vec![]),
        },
        (s @ (S::AwaitingConfirmation { .. } | S::Confirmed { .. }), E::FrameProcessed(_)) => (s, vec![]),
        (S::AwaitingConfirmation { .. }, E::OperatorReject) => (S::Search, vec![MissionAction::ResetFlags]),
        (S::AwaitingConfirmation { pending, fixes }, E::OperatorConfirm) => {
            let action = MissionAction::NotifyUsv {
                candidate_id: pending.candidate_id.clone(),
                aggregate: aggregate_fixes(&fixes).ok(),
            };
            (
                S::Confirmed {
                    candidate: pending,
                    fixes,
                },
                vec![action],
            )
        }
        (s, e) => {
            log::warn!("ignoring {} in state {}", event_name(&e), s.name());
            (s, vec![MissionAction::None])
        }
    }
}

fn event_name(e: &MissionEvent) -> &'static str {
    match e {
        MissionEvent::StartSearch => "StartSearch",
        MissionEvent::FrameProcessed(_) => "FrameProcessed",
        MissionEvent::OperatorConfirm => "OperatorConfirm",
        MissionEvent::OperatorReject => "OperatorReject",
        MissionEvent::Abort => "Abort",
    }
}
