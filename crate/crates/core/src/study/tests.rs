use super::*;

fn dataset() -> StudyDataset {
    StudyDataset::standard(30.0, 12)
}

fn answer(study: &Study, pid: &str, video_id: &str) -> PerceptionRecord {
    let v = study.dataset().video(video_id).unwrap();
    let b = study.dataset().base_of(v);
    PerceptionRecord {
        participant_id: pid.into(),
        video_id: video_id.into(),
        level: v.level,
        actor_choice: Choice::Known(b.actor),
        action_choice: Choice::Known(Action::Walking),
        response_time_ms: 1234,
        watched_full: false,
    }
}

#[test]
fn rotation_examples() {
    let d = dataset();
    let [a, b, g] = build_splits(&d).unwrap();
    let level = |s: &SplitAssignment, i: usize| d.video(&s.videos[i].1).unwrap().level;
    use LevelPreset::*;
    assert_eq!((level(&a, 0), level(&b, 0), level(&g, 0)), (Coarse, Medium, Fine));
    assert_eq!((level(&a, 1), level(&b, 1), level(&g, 1)), (Medium, Fine, Coarse));
}

#[test]
fn splits_are_balanced_and_complete() {
    let d = dataset();
    assert_eq!(d.base_videos.len(), 32);
    assert_eq!(d.videos.len(), 96);
    for s in build_splits(&d).unwrap() {
        let bases: std::collections::BTreeSet<_> = s.videos.iter().map(|(b, _)| *b).collect();
        assert_eq!(bases.len(), 32);
        let mut counts: Vec<usize> = s.level_counts(&d).into_values().collect();
        counts.sort();
        assert_eq!(counts, vec![10, 11, 11]);
    }
    // Each segmentation video appears in exactly one split.
    let all: std::collections::BTreeSet<String> = build_splits(&d)
        .unwrap()
        .iter()
        .flat_map(|s| s.videos.iter().map(|(_, v)| v.clone()))
        .collect();
    assert_eq!(all.len(), 96);
}

#[test]
fn missing_level_is_a_dataset_error() {
    let mut d = dataset();
    d.videos.retain(|v| !(v.base == 5 && v.level == LevelPreset::Fine));
    assert!(matches!(build_splits(&d), Err(Error::Dataset(_))));
}

#[test]
fn sessions_shuffle_deterministically() {
    let mut study = Study::in_memory(dataset()).unwrap();
    let a = study.start_session("a", Split::Alpha, 42).unwrap().playlist.clone();
    let b = study.start_session("b", Split::Alpha, 42).unwrap().playlist.clone();
    assert_eq!(a, b);
    assert_eq!(a.len(), 32);
    let uniq: std::collections::HashSet<_> = a.iter().collect();
    assert_eq!(uniq.len(), 32);
    let orders: std::collections::HashSet<Vec<String>> = (0..10)
        .map(|seed| {
            let pid = format!("s{seed}");
            study.start_session(&pid, Split::Alpha, seed).unwrap().playlist.clone()
        })
        .collect();
    assert_eq!(orders.len(), 10);
    assert!(matches!(study.start_session("a", Split::Beta, 1), Err(Error::Rejected(_))));
}

#[test]
fn record_validation() {
    let mut study = Study::in_memory(dataset()).unwrap();
    let playlist = study.start_session("p", Split::Gamma, 9).unwrap().playlist.clone();
    let other = study.splits()[0].videos[0].1.clone();

    let r = answer(&study, "p", &playlist[0]);
    assert_eq!(study.record_perception(r.clone()).unwrap(), 0);
    assert_eq!(study.records()[0], r);
    let err = study.record_perception(r).unwrap_err();
    assert!(matches!(err, Error::Rejected(ref m) if m.contains("already answered")));

    assert!(matches!(study.record_perception(answer(&study, "p", &other)), Err(Error::Rejected(_))));
    let mut ghost = answer(&study, "p", &playlist[1]);
    ghost.participant_id = "nobody".into();
    assert!(matches!(study.record_perception(ghost), Err(Error::Session(_))));

    let mut r = answer(&study, "p", &playlist[1]);
    r.response_time_ms = 0;
    assert!(matches!(study.record_perception(r.clone()), Err(Error::Param(_))));
    r.response_time_ms = 799;
    r.watched_full = true;
    assert!(matches!(study.record_perception(r.clone()), Err(Error::Param(_))));
    r.response_time_ms = 800;
    r.actor_choice = Choice::Unknown;
    assert!(matches!(study.record_perception(r.clone()), Err(Error::Param(_))));
    r.action_choice = Choice::Unknown;
    assert_eq!(study.record_perception(r).unwrap(), 1);
    assert_eq!(study.records().len(), 2);
}

#[test]
fn manifest_doubles_durations_with_cumulative_rounding() {
    let d = dataset();
    let m = d.manifest(&d.videos[0].video_id).unwrap();
    assert_eq!(m.frames.len(), 12);
    // 30 fps: 33.3 ms per frame, 66.7 ms shown.
    assert!(m.frames.iter().all(|f| f.duration_ms == 66 || f.duration_ms == 67));
    assert_eq!(m.frames.iter().map(|f| f.duration_ms).sum::<u64>(), 800);
    assert_eq!(m.total_duration_ms, 800);
    assert_eq!(m.frames[3].url, format!("/media/{}/frame_00003.ppm", m.video_id));
}

#[test]
fn choice_serializes_as_plain_strings() {
    let c: Choice<Action> = Choice::Known(Action::Eating);
    assert_eq!(serde_json::to_string(&c).unwrap(), "\"eating\"");
    assert_eq!(serde_json::to_string(&Choice::<Actor>::Unknown).unwrap(), "\"unknown\"");
    assert_eq!(serde_json::from_str::<Choice<Actor>>("\"animal\"").unwrap(), Choice::Known(Actor::Animal));
    assert!(serde_json::from_str::<Choice<Actor>>("\"robot\"").is_err());
}

#[test]
fn log_replay_reconstructs_state() {
    let dir = tempfile::tempdir().unwrap();
    let state = {
        let mut study = Study::open(dataset(), dir.path()).unwrap();
        for (i, split) in Split::ALL.iter().enumerate() {
            let pid = format!("p{i}");
            let playlist = study.start_session(&pid, *split, i as u64).unwrap().playlist.clone();
            for v in &playlist[..20] {
                study.record_perception(answer(&study, &pid, v)).unwrap();
            }
        }
        study.state().clone()
    };
    assert_eq!(state.records.len(), 60);
    assert!(dir.path().join("snapshot.json").exists());
    assert_eq!(replay_dir(dir.path()).unwrap(), state);

    let mut reopened = Study::open(dataset(), dir.path()).unwrap();
    assert_eq!(reopened.state(), &state);
    let next = reopened.session("p0").unwrap().next_video().unwrap().1.to_string();
    let r = answer(&reopened, "p0", &next);
    assert_eq!(reopened.record_perception(r).unwrap(), 60);

    let lines = std::fs::read_to_string(dir.path().join("records.ndjson")).unwrap();
    assert_eq!(parse_records(&lines).unwrap(), reopened.records());
    let receipts = std::fs::read_to_string(dir.path().join("receipts.ndjson")).unwrap();
    assert_eq!(receipts.lines().count(), 61);
}

#[test]
fn torn_last_line_is_ignored_on_replay() {
    let dir = tempfile::tempdir().unwrap();
    {
        let mut study = Study::open(dataset(), dir.path()).unwrap();
        let v = study.start_session("p", Split::Alpha, 1).unwrap().playlist[0].clone();
        study.record_perception(answer(&study, "p", &v)).unwrap();
    }
    use std::io::Write;
    let mut f = std::fs::OpenOptions::new()
        .append(true)
        .open(dir.path().join("records.ndjson"))
        .unwrap();
    f.write_all(b"{\"participant_id\":\"p\",\"vid").unwrap();
    drop(f);
    assert_eq!(replay_dir(dir.path()).unwrap().records.len(), 1);
    let mut study = Study::open(dataset(), dir.path()).unwrap();
    let v = study.session("p").unwrap().playlist[1].clone();
    study.record_perception(answer(&study, "p", &v)).unwrap();
    assert_eq!(replay_dir(dir.path()).unwrap().records.len(), 2);
}
