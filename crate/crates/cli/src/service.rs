//! Mission HTTP/WS API. Handlers read published snapshots; decisions are
//! forwarded to the mission loop, which is the only writer of state.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::{broadcast, mpsc, oneshot, watch};
use vesselid_core::geoloc::FixAggregate;
use vesselid_core::mission::FixDiagnostics;
use vesselid_core::{CandidateReport, MissionState, TargetFix, UavPose};

/// Everything the mission loop consumes, in arrival order.
#[derive(Debug)]
pub enum LoopMsg {
    Frame {
        reports: Vec<CandidateReport>,
        crops: Vec<(String, Vec<u8>)>,
    },
    Pose(UavPose),
    Decision {
        candidate_id: String,
        decision: Decision,
        reply: oneshot::Sender<DecisionOutcome>,
    },
    SourceEnded,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Confirm,
    Reject,
}

#[derive(Debug)]
pub enum DecisionOutcome {
    Applied(StateSnapshot),
    NotPending(StateSnapshot),
}

/// Body of `GET /api/state` and of `state` events.
#[derive(Debug, Clone, Serialize)]
pub struct StateSnapshot {
    pub seq: u64,
    #[serde(flatten)]
    pub state: MissionState,
    pub aggregate: Option<FixAggregate>,
    pub diagnostics: FixDiagnostics,
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateEntry {
    pub seq: u64,
    pub report: CandidateReport,
    /// Path of the crop PNG, when the candidate got that far.
    pub crop: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixEntry {
    pub seq: u64,
    pub fix: TargetFix,
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Event<'a> {
    State(&'a StateSnapshot),
    Candidate(&'a CandidateEntry),
    Fix(&'a FixEntry),
}

struct HubState {
    seq: u64,
    snapshot: StateSnapshot,
    candidates: Vec<CandidateEntry>,
    crops: HashMap<String, Vec<u8>>,
}

/// Published mission view shared by the loop and the HTTP handlers.
pub struct Hub {
    inner: RwLock<HubState>,
    events: broadcast::Sender<String>,
    loop_tx: mpsc::Sender<LoopMsg>,
    shutdown: watch::Sender<bool>,
}

impl Hub {
    pub fn new(loop_tx: mpsc::Sender<LoopMsg>) -> Self {
        let (events, _) = broadcast::channel(1024);
        let (shutdown, _) = watch::channel(false);
        Self {
            inner: RwLock::new(HubState {
                seq: 0,
                snapshot: StateSnapshot {
                    seq: 0,
                    state: MissionState::Idle,
                    aggregate: None,
                    diagnostics: FixDiagnostics::default(),
                },
                candidates: Vec::new(),
                crops: HashMap::new(),
            }),
            events,
            loop_tx,
            shutdown,
        }
    }

    fn emit(&self, event: Event<'_>) {
        // No subscribers is fine.
        let _ = self.events.send(serde_json::to_string(&event).expect("event serializes"));
    }

    pub fn publish_state(&self, state: &MissionState, diagnostics: &FixDiagnostics) -> StateSnapshot {
        let mut g = self.inner.write().expect("hub lock");
        g.seq += 1;
        g.snapshot = StateSnapshot {
            seq: g.seq,
            state: state.clone(),
            aggregate: state.aggregate(),
            diagnostics: diagnostics.clone(),
        };
        let snap = g.snapshot.clone();
        self.emit(Event::State(&snap));
        snap
    }

    pub fn publish_candidates(&self, reports: &[CandidateReport], crops: Vec<(String, Vec<u8>)>) {
        let mut g = self.inner.write().expect("hub lock");
        g.crops.extend(crops);
        for r in reports {
            g.seq += 1;
            let entry = CandidateEntry {
                seq: g.seq,
                report: r.clone(),
                crop: g
                    .crops
                    .contains_key(&r.candidate_id)
                    .then(|| format!("/api/crops/{}", r.candidate_id)),
            };
            self.emit(Event::Candidate(&entry));
            g.candidates.push(entry);
        }
    }

    pub fn publish_fix(&self, fix: TargetFix) {
        let mut g = self.inner.write().expect("hub lock");
        g.seq += 1;
        let entry = FixEntry { seq: g.seq, fix };
        self.emit(Event::Fix(&entry));
    }

    pub fn snapshot(&self) -> StateSnapshot {
        self.inner.read().expect("hub lock").snapshot.clone()
    }

    fn state_event(&self) -> String {
        serde_json::to_string(&Event::State(&self.snapshot())).expect("event serializes")
    }

    /// Candidates published after `since`: a sequence number or a
    /// candidate id. `None` when the id is unknown.
    fn candidates_since(&self, since: Option<&str>) -> Option<Vec<CandidateEntry>> {
        let g = self.inner.read().expect("hub lock");
        let after = match since {
            None => 0,
            Some(s) => match s.parse::<u64>() {
                Ok(seq) => seq,
                Err(_) => g.candidates.iter().find(|c| c.report.candidate_id == s)?.seq,
            },
        };
        let start = g.candidates.partition_point(|c| c.seq <= after);
        Some(g.candidates[start..].to_vec())
    }

    fn crop(&self, id: &str) -> Option<Vec<u8>> {
        self.inner.read().expect("hub lock").crops.get(id).cloned()
    }

    /// Stops the HTTP server and closes event streams.
    pub fn shutdown(&self) {
        let _ = self.shutdown.send(true);
    }

    pub async fn wait_shutdown(&self) {
        let mut rx = self.shutdown.subscribe();
        let _ = rx.wait_for(|v| *v).await;
    }
}

pub fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/api/state", get(get_state))
        .route("/api/candidates", get(get_candidates))
        .route("/api/crops/{id}", get(get_crop))
        .route("/api/decision", post(post_decision))
        .route("/api/events", get(events))
        .with_state(hub)
}

fn error_body(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(serde_json::json!({ "error": message.into() }))).into_response()
}

async fn get_state(State(hub): State<Arc<Hub>>) -> Json<StateSnapshot> {
    Json(hub.snapshot())
}

#[derive(Deserialize)]
struct SinceQuery {
    since: Option<String>,
}

async fn get_candidates(State(hub): State<Arc<Hub>>, Query(q): Query<SinceQuery>) -> Response {
    match hub.candidates_since(q.since.as_deref()) {
        Some(list) => Json(list).into_response(),
        None => error_body(StatusCode::NOT_FOUND, "unknown candidate id"),
    }
}

async fn get_crop(State(hub): State<Arc<Hub>>, Path(id): Path<String>) -> Response {
    match hub.crop(&id) {
        Some(png) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
        None => error_body(StatusCode::NOT_FOUND, format!("no crop for {id}")),
    }
}

#[derive(Deserialize)]
struct DecisionBody {
    candidate_id: String,
    decision: Decision,
}

async fn post_decision(State(hub): State<Arc<Hub>>, Json(body): Json<DecisionBody>) -> Response {
    let (reply, rx) = oneshot::channel();
    let msg = LoopMsg::Decision {
        candidate_id: body.candidate_id,
        decision: body.decision,
        reply,
    };
    if hub.loop_tx.send(msg).await.is_err() {
        return error_body(StatusCode::SERVICE_UNAVAILABLE, "mission loop has stopped");
    }
    match rx.await {
        Ok(DecisionOutcome::Applied(snap)) => Json(snap).into_response(),
        Ok(DecisionOutcome::NotPending(snap)) => (
            StatusCode::CONFLICT,
            Json(serde_json::json!({ "error": "candidate is not pending", "state": snap })),
        )
            .into_response(),
        Err(_) => error_body(StatusCode::SERVICE_UNAVAILABLE, "mission loop has stopped"),
    }
}

async fn events(State(hub): State<Arc<Hub>>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| stream_events(socket, hub))
}

async fn stream_events(mut socket: WebSocket, hub: Arc<Hub>) {
    // Subscribe before taking the snapshot so nothing falls in between;
    // clients deduplicate by seq.
    let mut rx = hub.events.subscribe();
    let mut stop = hub.shutdown.subscribe();
    if *stop.borrow() {
        return;
    }
    if socket.send(Message::Text(hub.state_event().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(text) => {
                    if socket.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => {
                    log::warn!("event stream lagged by {n}; resending state");
                    if socket.send(Message::Text(hub.state_event().into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Closed) => break,
            },
            incoming = socket.recv() => match incoming {
                None | Some(Err(_)) | Some(Ok(Message::Close(_))) => break,
                Some(Ok(_)) => {}
            },
            changed = stop.changed() => {
                if changed.is_err() || *stop.borrow() {
                    let _ = socket.send(Message::Close(None)).await;
                    break;
                }
            }
        }
    }
}
