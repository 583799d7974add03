//! Generated sequence through identification and the mission runner.

use vesselid_core::evalkit::SequenceSpec;
use vesselid_core::geoloc::GeolocConfig;
use vesselid_core::identify::{identify_frame, load_template};
use vesselid_core::mission::{MissionPolicy, MissionRunner};
use vesselid_core::{FrameDetections, IdentifyConfig, MissionAction, MissionEvent, MissionState, Verdict};

fn run(spec: &SequenceSpec) -> (MissionRunner, usize, Vec<MissionAction>) {
    let cfg = IdentifyConfig::default();
    let [a, b] = spec.templates();
    let templates = [load_template(&a, 1, &cfg).unwrap(), load_template(&b, 2, &cfg).unwrap()];
    let geoloc = GeolocConfig {
        intrinsics: spec.intrinsics,
        target_height: spec.target_height,
        ..GeolocConfig::default()
    };
    let mut runner = MissionRunner::new(MissionPolicy::default(), geoloc);
    runner.handle(MissionEvent::StartSearch);
    let mut tracked_targets = 0;
    let mut actions = Vec::new();
    for i in 0..spec.frames {
        let f = spec.frame(i);
        runner.push_pose(f.pose);
        let dets = FrameDetections {
            frame_id: i as u64,
            timestamp: f.pose.timestamp,
            detections: f.truth.boxes.clone(),
        };
        let reports = identify_frame(&f.image, &dets, &templates, &cfg);
        let was_tracking = matches!(runner.state(), MissionState::AwaitingConfirmation { .. });
        let has_target = reports.iter().any(|r| r.verdict == Verdict::Target);
        let out = runner.handle(MissionEvent::FrameProcessed(reports));
        if has_target && (was_tracking || matches!(runner.state(), MissionState::AwaitingConfirmation { .. })) {
            tracked_targets += 1;
        }
        actions.extend(out);
    }
    (runner, tracked_targets, actions)
}

#[test]
fn aggregate_counts_every_target_frame_with_a_pose() {
    let spec = SequenceSpec {
        frames: 60,
        ..SequenceSpec::default()
    };
    let (mut runner, tracked, actions) = run(&spec);
    assert!(matches!(runner.state(), MissionState::AwaitingConfirmation { .. }));
    let emitted = actions.iter().filter(|a| matches!(a, MissionAction::EmitFix(_))).count();
    assert_eq!(runner.state().fixes().len(), tracked);
    assert_eq!(emitted, tracked);
    assert_eq!(runner.diagnostics().no_pose, 0);
    // Each fix lands near the target's true track at that instant.
    for fix in runner.state().fixes() {
        let truth = spec.target_position(fix.timestamp);
        assert!((fix.x - truth[0]).hypot(fix.y - truth[1]) < 1.0, "{fix:?}");
    }

    let out = runner.handle(MissionEvent::OperatorConfirm);
    let agg = out
        .iter()
        .find_map(|a| match a {
            MissionAction::NotifyUsv { aggregate, .. } => aggregate.clone(),
            _ => None,
        })
        .expect("confirm notifies the USV");
    assert_eq!(agg.count, tracked);
    assert!(!agg.degenerate);
}
