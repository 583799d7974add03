use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use tokio::sync::mpsc;
use vesselid_core::evalkit::{frame_stem, read_meta, read_poses};
use vesselid_core::gateway::{ingest_wire_message, spawn_source, GatewayError, NdjsonSource, ReplayFrame};
use vesselid_core::geoloc::{parse_pose_line, GeolocConfig};
use vesselid_core::identify::load_template_bundle;
use vesselid_core::imaging::encode_png;
use vesselid_core::mission::MissionRunner;
use vesselid_core::{IdentifyConfig, MissionAction, MissionEvent, MissionState, TemplateModel, UavPose};

use crate::config::AppConfig;
use crate::error::CliError;
use crate::frames::{identify_replay_frame, open_dataset};
use crate::service::{router, Decision, DecisionOutcome, Hub, LoopMsg};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Template bundle written by prepare-template.
    #[arg(long)]
    templates: PathBuf,

    /// Detection source: a replay directory, `-` for NDJSON on stdin, or
    /// `tcp://host:port`. Defaults to gateway.source from the config.
    #[arg(long)]
    detections: Option<String>,

    /// Frame images (NNNNNN.png) for stdin/tcp detection sources.
    #[arg(long)]
    images: Option<PathBuf>,

    /// Pose source: an NDJSON file, `-` for stdin, or `tcp://host:port`.
    /// Defaults to poses.ndjson inside a replay directory.
    #[arg(long)]
    poses: Option<String>,

    /// Overrides service.bind.
    #[arg(long)]
    bind: Option<String>,

    /// Overrides service.port; 0 picks a free port.
    #[arg(long)]
    port: Option<u16>,

    /// Scripted operator: answer every notification this way.
    #[arg(long, value_enum)]
    auto_decision: Option<Decision>,

    /// Frames the scripted operator waits after a notification.
    #[arg(long, default_value_t = 3)]
    decision_after: u32,

    /// Replay pacing in frames per second; unpaced when omitted.
    #[arg(long)]
    rate: Option<f64>,

    /// Stop when the detection source ends instead of serving on.
    #[arg(long)]
    exit_on_eof: bool,

    /// Where the fix aggregate is written once the target is confirmed.
    #[arg(long, default_value = "fix_aggregate.json")]
    aggregate_out: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
enum Source {
    Dir(PathBuf),
    File(PathBuf),
    Stdin,
    Tcp(String),
}

fn parse_source(s: &str) -> Source {
    if s == "-" {
        Source::Stdin
    } else if let Some(addr) = s.strip_prefix("tcp://") {
        Source::Tcp(addr.to_string())
    } else {
        let p = PathBuf::from(s);
        if p.is_dir() {
            Source::Dir(p)
        } else {
            Source::File(p)
        }
    }
}

pub fn run(args: Args, cfg: &AppConfig) -> Result<(), CliError> {
    let id_cfg = cfg.identify_config();
    let templates = load_template_bundle(&args.templates, &id_cfg)?;

    let det_spec = args
        .detections
        .clone()
        .or_else(|| cfg.gateway.source.clone())
        .ok_or_else(|| CliError::Usage("no detection source: pass --detections or set gateway.source".into()))?;
    let detections = parse_source(&det_spec);
    match &detections {
        Source::File(p) => return Err(CliError::Data(format!("detection source {} is not a directory", p.display()))),
        Source::Stdin | Source::Tcp(_) if args.images.is_none() => {
            return Err(CliError::Usage("--images is required for stdin/tcp detection sources".into()))
        }
        _ => {}
    }
    if let Some(r) = args.rate {
        if !(r > 0.0 && r.is_finite()) {
            return Err(CliError::Usage(format!("--rate must be positive, got {r}")));
        }
    }

    let poses = match (&args.poses, &detections) {
        (Some(s), _) => Some(parse_source(s)),
        (None, Source::Dir(d)) if d.join("poses.ndjson").is_file() => Some(Source::File(d.join("poses.ndjson"))),
        _ => None,
    };
    if poses == Some(Source::Stdin) && detections == Source::Stdin {
        return Err(CliError::Usage("detections and poses cannot both come from stdin".into()));
    }
    let initial_poses = match &poses {
        Some(Source::File(p)) => read_poses(p)?,
        Some(Source::Dir(p)) => return Err(CliError::Data(format!("pose source {} is a directory", p.display()))),
        None => {
            log::warn!("no pose source; no fixes will be produced");
            Vec::new()
        }
        _ => Vec::new(),
    };
    if let Source::Dir(d) = &detections {
        warn_on_geometry_mismatch(d, &cfg.geoloc);
    }

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Runtime(format!("tokio runtime: {e}")))?;
    let plan = Plan {
        args,
        detections,
        poses,
        initial_poses,
        templates,
        id_cfg,
        cfg: cfg.clone(),
    };
    let result = runtime.block_on(serve(plan));
    // Source threads may be blocked on reads; do not wait for them.
    runtime.shutdown_timeout(Duration::from_millis(200));
    result
}

struct Plan {
    args: Args,
    detections: Source,
    poses: Option<Source>,
    initial_poses: Vec<UavPose>,
    templates: [TemplateModel; 2],
    id_cfg: IdentifyConfig,
    cfg: AppConfig,
}

async fn serve(plan: Plan) -> Result<(), CliError> {
    let bind = plan.args.bind.clone().unwrap_or_else(|| plan.cfg.service.bind.clone());
    let port = plan.args.port.unwrap_or(plan.cfg.service.port);
    let addr = format!("{bind}:{port}");
    let listener = tokio::net::TcpListener::bind(&addr)
        .await
        .map_err(|e| CliError::Runtime(format!("cannot bind {addr}: {e}")))?;
    let local = listener.local_addr()?;
    eprintln!("listening on http://{local}");

    let (tx, rx) = mpsc::channel::<LoopMsg>(64);
    let hub = Arc::new(Hub::new(tx.clone()));
    let abort = Arc::new(AtomicBool::new(false));

    let server = {
        let hub = hub.clone();
        let app = router(hub.clone());
        tokio::spawn(async move {
            let res = axum::serve(listener, app)
                .with_graceful_shutdown(async move { hub.wait_shutdown().await })
                .await;
            if let Err(e) = res {
                log::error!("service: {e}");
            }
        })
    };

    {
        let tx = tx.clone();
        tokio::spawn(async move {
            if tokio::signal::ctrl_c().await.is_ok() {
                let _ = tx.send(LoopMsg::Abort).await;
            }
        });
    }

    if let Some(src) = plan.poses.clone() {
        if matches!(src, Source::Stdin | Source::Tcp(_)) {
            let (tx, abort) = (tx.clone(), abort.clone());
            let exit_on_eof = plan.args.exit_on_eof;
            std::thread::spawn(move || pose_reader(src, tx, abort, exit_on_eof));
        }
    }

    let gateway = Gateway {
        source: plan.detections.clone(),
        images: plan.args.images.clone(),
        templates: plan.templates,
        cfg: plan.id_cfg,
        rate: plan.args.rate,
        capacity: plan.cfg.gateway.queue_capacity,
        exit_on_eof: plan.args.exit_on_eof,
    };
    {
        let (tx, abort) = (tx.clone(), abort.clone());
        std::thread::spawn(move || gateway.run(tx, abort));
    }
    drop(tx);

    let mut runner = MissionRunner::new(plan.cfg.mission.clone(), plan.cfg.geoloc.clone());
    for p in plan.initial_poses {
        runner.push_pose(p);
    }
    let opts = LoopOpts {
        auto_decision: plan.args.auto_decision,
        decision_after: plan.args.decision_after,
        exit_on_eof: plan.args.exit_on_eof,
        aggregate_out: plan.args.aggregate_out.clone(),
    };
    let result = mission_loop(rx, &hub, runner, &opts).await;

    abort.store(true, Ordering::SeqCst);
    hub.shutdown();
    let _ = server.await;
    let state = result?;
    eprintln!("final state: {} ({} fixes)", state.name(), state.fixes().len());
    Ok(())
}

struct LoopOpts {
    auto_decision: Option<Decision>,
    decision_after: u32,
    exit_on_eof: bool,
    aggregate_out: PathBuf,
}

/// The single writer of mission state. Returns the final state.
async fn mission_loop(
    mut rx: mpsc::Receiver<LoopMsg>,
    hub: &Hub,
    mut runner: MissionRunner,
    opts: &LoopOpts,
) -> Result<MissionState, CliError> {
    let mut out = FixOutput {
        aggregate_out: opts.aggregate_out.clone(),
    };
    let actions = runner.handle(MissionEvent::StartSearch);
    out.apply(hub, &runner, actions)?;
    hub.publish_state(runner.state(), runner.diagnostics());

    let mut frames_pending = 0u32;
    while let Some(msg) = rx.recv().await {
        match msg {
            LoopMsg::Pose(p) => runner.push_pose(p),
            LoopMsg::Frame { reports, crops } => {
                hub.publish_candidates(&reports, crops);
                let before = runner.state().clone();
                let actions = runner.handle(MissionEvent::FrameProcessed(reports));
                out.apply(hub, &runner, actions)?;
                if *runner.state() != before {
                    hub.publish_state(runner.state(), runner.diagnostics());
                }
                if runner.state().pending().is_none() {
                    frames_pending = 0;
                    continue;
                }
                frames_pending += 1;
                if let Some(d) = opts.auto_decision {
                    if frames_pending >= opts.decision_after.max(1) {
                        frames_pending = 0;
                        let id = runner.state().pending().map(|p| p.candidate_id.clone()).unwrap_or_default();
                        log::info!("scripted operator: {d:?} {id}");
                        decide(hub, &mut runner, &mut out, d)?;
                    }
                }
            }
            LoopMsg::Decision {
                candidate_id,
                decision,
                reply,
            } => {
                let pending = runner.state().pending().is_some_and(|p| p.candidate_id == candidate_id);
                let outcome = if pending {
                    frames_pending = 0;
                    DecisionOutcome::Applied(decide(hub, &mut runner, &mut out, decision)?)
                } else {
                    DecisionOutcome::NotPending(hub.snapshot())
                };
                let _ = reply.send(outcome);
            }
            LoopMsg::SourceEnded => {
                log::info!("detection source ended");
                if opts.exit_on_eof {
                    break;
                }
            }
            LoopMsg::Abort => {
                let actions = runner.handle(MissionEvent::Abort);
                out.apply(hub, &runner, actions)?;
                hub.publish_state(runner.state(), runner.diagnostics());
                break;
            }
        }
    }
    Ok(runner.state().clone())
}

fn decide(
    hub: &Hub,
    runner: &mut MissionRunner,
    out: &mut FixOutput,
    d: Decision,
) -> Result<crate::service::StateSnapshot, CliError> {
    let event = match d {
        Decision::Confirm => MissionEvent::OperatorConfirm,
        Decision::Reject => MissionEvent::OperatorReject,
    };
    let actions = runner.handle(event);
    out.apply(hub, runner, actions)?;
    Ok(hub.publish_state(runner.state(), runner.diagnostics()))
}

/// Fix stream on stdout and the aggregate file. Both are gated on
/// confirmation; before that, fixes only go to the operator event stream.
struct FixOutput {
    aggregate_out: PathBuf,
}

impl FixOutput {
    fn apply(&mut self, hub: &Hub, runner: &MissionRunner, actions: Vec<MissionAction>) -> Result<(), CliError> {
        let confirmed = matches!(runner.state(), MissionState::Confirmed { .. });
        for action in actions {
            match action {
                MissionAction::NotifyOperator(r) => {
                    log::info!("operator notified: candidate {} (d_hist {:?})", r.candidate_id, r.d_hist);
                }
                MissionAction::EmitFix(fix) => {
                    hub.publish_fix(fix);
                    if confirmed {
                        print_fixes(&[fix])?;
                        self.write_aggregate(runner)?;
                    }
                }
                MissionAction::NotifyUsv { candidate_id, .. } => {
                    log::info!("target {candidate_id} confirmed");
                    print_fixes(runner.state().fixes())?;
                    self.write_aggregate(runner)?;
                }
                MissionAction::ResetFlags => log::info!("candidate rejected; search restarted"),
                MissionAction::None => {}
            }
        }
        Ok(())
    }

    fn write_aggregate(&self, runner: &MissionRunner) -> Result<(), CliError> {
        let Some(agg) = runner.state().aggregate() else {
            return Ok(());
        };
        let text = serde_json::to_string_pretty(&agg).expect("plain struct");
        write_atomic(&self.aggregate_out, text.as_bytes())
            .map_err(|e| CliError::Runtime(format!("{}: {e}", self.aggregate_out.display())))
    }
}

fn print_fixes(fixes: &[vesselid_core::TargetFix]) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for f in fixes {
        writeln!(lock, "{}", f.to_ndjson())?;
    }
    lock.flush()?;
    Ok(())
}

fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

fn warn_on_geometry_mismatch(dir: &Path, geoloc: &GeolocConfig) {
    let Ok(meta) = read_meta(dir) else { return };
    let Some(spec) = meta.spec else { return };
    if spec.intrinsics != geoloc.intrinsics || spec.target_height != geoloc.target_height {
        log::warn!(
            "dataset camera/target height differ from [geoloc] config; fixes use the config values"
        );
    }
}

struct Gateway {
    source: Source,
    images: Option<PathBuf>,
    templates: [TemplateModel; 2],
    cfg: IdentifyConfig,
    rate: Option<f64>,
    capacity: usize,
    exit_on_eof: bool,
}

type FrameIter = Box<dyn Iterator<Item = Result<ReplayFrame, GatewayError>> + Send>;

impl Gateway {
    fn frames(&self, abort: Arc<AtomicBool>) -> Result<FrameIter, CliError> {
        let images = self.images.clone().unwrap_or_default();
        let attach = move |r: Result<vesselid_core::FrameDetections, GatewayError>| {
            r.map(|frame| ReplayFrame {
                image_path: images.join(format!("{}.png", frame_stem(frame.frame_id))),
                frame,
            })
        };
        Ok(match &self.source {
            Source::Dir(d) => Box::new(open_dataset(d, None)?),
            Source::Stdin => Box::new(NdjsonSource::new(BufReader::new(std::io::stdin())).map(attach)),
            Source::Tcp(addr) => Box::new(
                TcpLines::new(addr.clone(), abort, self.exit_on_eof)
                    .map(|line| ingest_wire_message(&line))
                    .map(attach),
            ),
            Source::File(p) => return Err(CliError::Data(format!("{} is not a directory", p.display()))),
        })
    }

    /// Reader thread feeds a bounded queue; this thread identifies frames
    /// in order, fanning candidates out to the worker pool.
    fn run(self, tx: mpsc::Sender<LoopMsg>, abort: Arc<AtomicBool>) {
        let frames = match self.frames(abort.clone()) {
            Ok(f) => f,
            Err(e) => {
                log::error!("detection source: {e}");
                let _ = tx.blocking_send(LoopMsg::SourceEnded);
                return;
            }
        };
        let (queue, _reader) = spawn_source(frames, self.capacity);
        let period = self.rate.map(|r| Duration::from_secs_f64(1.0 / r));
        let mut next_due = Instant::now();
        for item in queue {
            if abort.load(Ordering::SeqCst) {
                return;
            }
            if let Some(p) = period {
                let now = Instant::now();
                if next_due > now {
                    std::thread::sleep(next_due - now);
                }
                next_due = next_due.max(now) + p;
            }
            let rf = match item {
                Ok(rf) => rf,
                Err(e) => {
                    log::error!("detection source: {e}");
                    continue;
                }
            };
            let assessed = match identify_replay_frame(&rf, &self.templates, &self.cfg) {
                Ok(a) => a,
                Err(e) => {
                    log::error!("frame {}: {e}", rf.frame.frame_id);
                    continue;
                }
            };
            let mut reports = Vec::with_capacity(assessed.len());
            let mut crops = Vec::new();
            for a in assessed {
                if let Some(png) = a.crop.as_ref().and_then(|c| encode_png(c).ok()) {
                    crops.push((a.report.candidate_id.clone(), png));
                }
                reports.push(a.report);
            }
            if tx.blocking_send(LoopMsg::Frame { reports, crops }).is_err() {
                return;
            }
        }
        let _ = tx.blocking_send(LoopMsg::SourceEnded);
    }
}

fn pose_reader(src: Source, tx: mpsc::Sender<LoopMsg>, abort: Arc<AtomicBool>, exit_on_eof: bool) {
    let lines: Box<dyn Iterator<Item = String>> = match src {
        Source::Stdin => Box::new(BufReader::new(std::io::stdin()).lines().map_while(Result::ok)),
        Source::Tcp(addr) => Box::new(TcpLines::new(addr, abort, exit_on_eof)),
        _ => return,
    };
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        match parse_pose_line(&line) {
            Ok(p) => {
                if tx.blocking_send(LoopMsg::Pose(p)).is_err() {
                    return;
                }
            }
            Err(e) => log::warn!("pose source: {e}"),
        }
    }
}

const BACKOFF_MIN: Duration = Duration::from_millis(100);
const BACKOFF_MAX: Duration = Duration::from_secs(5);
const READ_POLL: Duration = Duration::from_millis(250);

/// Newline-delimited text from a TCP server, reconnecting with
/// exponential backoff. With `stop_on_disconnect` the stream ends at the
/// first disconnect after a successful connection.
struct TcpLines {
    addr: String,
    reader: Option<BufReader<TcpStream>>,
    buf: Vec<u8>,
    backoff: Duration,
    abort: Arc<AtomicBool>,
    stop_on_disconnect: bool,
}

impl TcpLines {
    fn new(addr: String, abort: Arc<AtomicBool>, stop_on_disconnect: bool) -> Self {
        Self {
            addr,
            reader: None,
            buf: Vec::new(),
            backoff: BACKOFF_MIN,
            abort,
            stop_on_disconnect,
        }
    }

    fn sleep_backoff(&mut self) {
        let until = Instant::now() + self.backoff;
        while Instant::now() < until && !self.abort.load(Ordering::SeqCst) {
            std::thread::sleep(Duration::from_millis(20));
        }
        self.backoff = (self.backoff * 2).min(BACKOFF_MAX);
    }
}

impl Iterator for TcpLines {
    type Item = String;

    fn next(&mut self) -> Option<String> {
        loop {
            if self.abort.load(Ordering::SeqCst) {
                return None;
            }
            let Some(reader) = self.reader.as_mut() else {
                match TcpStream::connect(&self.addr) {
                    Ok(s) => {
                        let _ = s.set_read_timeout(Some(READ_POLL));
                        log::info!("connected to {}", self.addr);
                        self.reader = Some(BufReader::new(s));
                        self.backoff = BACKOFF_MIN;
                    }
                    Err(e) => {
                        log::warn!("{}: {e}; retrying in {:?}", self.addr, self.backoff);
                        self.sleep_backoff();
                    }
                }
                continue;
            };
            match reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.reader = None;
                    self.buf.clear();
                    if self.stop_on_disconnect {
                        return None;
                    }
                    log::warn!("{} disconnected", self.addr);
                }
                Ok(_) if self.buf.ends_with(b"\n") => {
                    let line = String::from_utf8_lossy(&self.buf).trim().to_string();
                    self.buf.clear();
                    if !line.is_empty() {
                        return Some(line);
                    }
                }
                Ok(_) => {}
                Err(e) if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
                Err(e) => {
                    log::warn!("{}: {e}", self.addr);
                    self.reader = None;
                    self.buf.clear();
                    if self.stop_on_disconnect {
                        return None;
                    }
                }
            }
        }
    }
}
