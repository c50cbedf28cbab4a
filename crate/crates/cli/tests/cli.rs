use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rmprofile::io::snapshot::SNAPSHOT_VERSION;
use rmprofile::{snapshot_load, AdditiveState, DistanceConfig, ProfileState};

fn rmprofile(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rmprofile"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rmprofile(args);
    assert!(
        out.status.success(),
        "rmprofile {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    rmprofile(args).status.code().unwrap()
}

/// Two readings per day, one user.
fn write_days(dir: &Path, name: &str, days: &[[f64; 2]]) -> PathBuf {
    let mut text = String::from("user,date,a,b\n");
    for (i, d) in days.iter().enumerate() {
        text.push_str(&format!("u1,2024-01-{:02},{},{}\n", i + 1, d[0], d[1]));
    }
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TWO_READINGS: [&str; 2] = ["--interval-minutes", "720"];

fn init(input: &Path, snapshot: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["init", "--input", s(input), "--snapshot", s(snapshot)];
    args.extend(TWO_READINGS);
    args.extend(extra);
    rmprofile(&args)
}

#[test]
fn init_reproduces_the_three_day_profile() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[0.0, 0.0], [0.0, 0.0], [10.0, 10.0]]);
    let snap = dir.path().join("s.json");
    assert!(init(&csv, &snap, &["--threshold", "5"]).status.success());
    let ProfileState::Additive(state) = snapshot_load(&snap).unwrap().into_profile().unwrap() else {
        panic!("expected an additive state");
    };
    let counts: Vec<u32> = state.records.iter().map(|r| r.count).collect();
    let means: Vec<f64> = state.records.iter().map(|r| r.norm_mean_dist).collect();
    assert_eq!(counts, vec![1, 1, 0]);
    assert_eq!(means, vec![0.5, 0.5, 1.0]);
    assert_eq!(state.d_max, 20.0);

    let rm = ok(&["rm", "--snapshot", s(&snap)]);
    assert!(rm.contains("record 0\n"), "{rm}");
    assert!(rm.contains("sp 0.5\n"), "{rm}");
    assert!(rm.contains("values 0,0"), "{rm}");
}

#[test]
fn automatic_threshold_is_a_pairwise_distance() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[0.0, 0.0], [1.0, 1.0], [3.0, 3.0], [7.0, 7.0]]);
    let snap = dir.path().join("s.json");
    assert!(init(&csv, &snap, &["--threshold", "auto"]).status.success());
    let state = snapshot_load(&snap).unwrap().into_profile().unwrap();
    // distances 2, 6, 14, 4, 12, 8; nearest-rank 30th percentile is the second smallest
    assert_eq!(state.threshold(), 4.0);
}

#[test]
fn one_day_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[1.0, 2.0]]);
    let snap = dir.path().join("s.json");
    assert_eq!(init(&csv, &snap, &[]).status.code(), Some(2));
    assert!(!snap.exists());
}

#[test]
fn bad_flag_values_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[1.0, 2.0], [2.0, 1.0]]);
    let snap = dir.path().join("s.json");
    assert_eq!(init(&csv, &snap, &["--threshold", "-1"]).status.code(), Some(2));
    assert_eq!(init(&csv, &snap, &["--band", "wide"]).status.code(), Some(2));
    assert_eq!(init(&csv, &snap, &["--slice", "1:1"]).status.code(), Some(2));
}

#[test]
fn additive_updates_match_a_fresh_init() {
    let dir = tempfile::tempdir().unwrap();
    let all = [[0.0, 1.0], [2.0, 2.0], [0.5, 1.0], [4.0, 0.0], [0.0, 1.5], [3.0, 3.0]];
    let head = write_days(dir.path(), "head.csv", &all[..3]);
    let full = write_days(dir.path(), "full.csv", &all);
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert!(init(&head, &a, &["--threshold", "2"]).status.success());
    for d in &all[3..] {
        ok(&["update", "--snapshot", s(&a), "--values", &format!("{},{}", d[0], d[1])]);
    }
    assert!(init(&full, &b, &["--threshold", "2"]).status.success());
    let (sa, sb) = (
        snapshot_load(&a).unwrap().into_profile().unwrap(),
        snapshot_load(&b).unwrap().into_profile().unwrap(),
    );
    assert_eq!(sa, sb);

    let oracle = AdditiveState::new(
        all.iter()
            .enumerate()
            .map(|(i, d)| rmprofile::DayPattern::new(i as u32, d.to_vec()).unwrap())
            .collect(),
        2.0,
        DistanceConfig::default().with_band(1),
    )
    .unwrap();
    assert_eq!(sa, ProfileState::Additive(oracle));
}

#[test]
fn update_from_a_file_continues_the_day_index() {
    let dir = tempfile::tempdir().unwrap();
    let head = write_days(dir.path(), "head.csv", &[[0.0, 1.0], [2.0, 2.0]]);
    let more = write_days(dir.path(), "more.csv", &[[1.0, 1.0], [3.0, 0.0]]);
    let snap = dir.path().join("s.json");
    assert!(init(&head, &snap, &["--threshold", "2"]).status.success());
    let mut args = vec!["update", "--snapshot", s(&snap), "--input", s(&more)];
    args.extend(TWO_READINGS);
    let out = ok(&args);
    assert!(out.starts_with("applied 2 day(s); 4 records"), "{out}");
    let state = snapshot_load(&snap).unwrap().into_profile().unwrap();
    assert_eq!(state.last_day_index(), Some(3));
}

#[test]
fn full_fixed_window_keeps_its_size() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[0.0, 1.0], [2.0, 2.0], [0.5, 1.0]]);
    let snap = dir.path().join("s.json");
    let extra = [
        "--method",
        "fixed",
        "--memory",
        "3",
        "--strategy",
        "high",
        "--threshold",
        "1",
    ];
    assert!(init(&csv, &snap, &extra).status.success());
    for v in ["4,0", "0,1.5", "3,3", "1,1"] {
        let out = ok(&["update", "--snapshot", s(&snap), "--values", v]);
        assert!(out.contains("; 3 records;"), "{out}");
    }
    let ProfileState::Fixed(state) = snapshot_load(&snap).unwrap().into_profile().unwrap() else {
        panic!("expected a fixed-memory state");
    };
    assert_eq!(state.window.len(), 3);
    assert_eq!(state.window.last().unwrap().values, vec![1.0, 1.0]);
}

#[test]
fn rejected_update_leaves_the_snapshot_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[0.0, 1.0], [2.0, 2.0]]);
    let snap = dir.path().join("s.json");
    assert!(init(&csv, &snap, &[]).status.success());
    let before = fs::read(&snap).unwrap();
    assert_eq!(code(&["update", "--snapshot", s(&snap), "--values", "1,x"]), 2);
    assert_eq!(code(&["update", "--snapshot", s(&snap), "--values", "1,2,3"]), 2);
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "user,date,a,b\nu1,2024-02-01,1,2\nu1,not-a-date,1,2\n").unwrap();
    let mut args = vec!["update", "--snapshot", s(&snap), "--input", s(&bad)];
    args.extend(TWO_READINGS);
    let out = rmprofile(&args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
    assert_eq!(fs::read(&snap).unwrap(), before);
}

#[test]
fn damaged_snapshots_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[0.0, 1.0], [2.0, 2.0]]);
    let snap = dir.path().join("s.json");
    assert!(init(&csv, &snap, &[]).status.success());
    let text = fs::read_to_string(&snap).unwrap();

    let tampered = dir.path().join("t.json");
    fs::write(&tampered, text.replacen("\"d_max\":3.0", "\"d_max\":4.0", 1)).unwrap();
    assert_ne!(fs::read_to_string(&tampered).unwrap(), text);
    assert_eq!(code(&["rm", "--snapshot", s(&tampered)]), 3);

    let future = dir.path().join("f.json");
    let v = format!("\"version\":{}", SNAPSHOT_VERSION);
    assert!(text.contains(&v));
    fs::write(&future, text.replacen(&v, "\"version\":99", 1)).unwrap();
    assert_eq!(code(&["update", "--snapshot", s(&future), "--values", "1,1"]), 3);

    let cut = dir.path().join("c.json");
    fs::write(&cut, &text[..text.len() / 2]).unwrap();
    assert_eq!(code(&["rm", "--snapshot", s(&cut)]), 3);
}

#[test]
fn classify_refuses_an_untrained_model() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    let snap = rmprofile::Snapshot::classifier(rmprofile::ClassifierModel::zeros(2));
    rmprofile::snapshot_save(&snap, &model).unwrap();
    let csv = write_days(dir.path(), "d.csv", &[[0.0, 1.0], [2.0, 2.0]]);
    let state = dir.path().join("s.json");
    assert!(init(&csv, &state, &[]).status.success());
    let out = rmprofile(&["classify", "--model", s(&model), "--snapshot", s(&state)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not been trained"));
}

#[test]
fn training_is_reproducible_and_classifies_its_fleet() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for p in [&a, &b] {
        let out = ok(&["train", "--users", "8", "--days", "20", "--seed", "3", "--model", s(p)]);
        assert!(out.contains("training accuracy 1.0000"), "{out}");
    }
    let model_of = |p: &Path| snapshot_load(p).unwrap().into_classifier().unwrap();
    assert_eq!(model_of(&a), model_of(&b));

    let fleet = dir.path().join("fleet.csv");
    let labels = dir.path().join("labels.csv");
    ok(&[
        "generate",
        "--mixed",
        "--users",
        "5",
        "--days",
        "20",
        "--seed",
        "9",
        "--output",
        s(&fleet),
        "--labels",
        s(&labels),
    ]);
    let out = ok(&[
        "classify",
        "--model",
        s(&a),
        "--input",
        s(&fleet),
        "--labels",
        s(&labels),
    ]);
    assert!(out.contains("over 10 labelled users"), "{out}");
}

#[test]
fn switch_experiment_writes_reports_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("switch");
    let stdout = ok(&[
        "experiment",
        "switch",
        "--users",
        "6",
        "--days",
        "40",
        "--switch-day",
        "20",
        "--memory",
        "5",
        "--seed",
        "4",
        "--out-dir",
        s(&out_dir),
    ]);
    assert!(stdout.starts_with("strategy\tmedian\tundetected\n"), "{stdout}");
    for f in ["switch_latency.csv", "switch_histogram.csv", "switch_summary.csv"] {
        let text = fs::read_to_string(out_dir.join(f)).unwrap();
        assert!(text.starts_with("# tool: rmprofile"), "{f}");
        assert!(text.contains("# seed: 4"), "{f}");
    }
    let latency = fs::read_to_string(out_dir.join("switch_latency.csv")).unwrap();
    assert_eq!(latency.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6 * 3);
}

#[test]
fn switch_after_the_stream_ends_is_never_detected() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("switch");
    ok(&[
        "experiment",
        "switch",
        "--users",
        "4",
        "--days",
        "30",
        "--switch-day",
        "30",
        "--memory",
        "5",
        "--out-dir",
        s(&out_dir),
    ]);
    let summary = fs::read_to_string(out_dir.join("switch_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r.ends_with(",undetected,4,4"), "{r}");
    }
}

#[test]
fn compression_rejects_non_codebook_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("c");
    let args = [
        "experiment",
        "compression",
        "--users",
        "3",
        "--days",
        "10",
        "--method",
        "fixed",
        "--out-dir",
        s(&out_dir),
    ];
    assert_eq!(code(&args), 2);
}

#[test]
fn bench_reports_every_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let stdout = ok(&["bench", "--sizes", "20,40", "--reps", "5", "--output", s(&out)]);
    assert_eq!(stdout.lines().count(), 1 + 2 * 4);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# tool: rmprofile"));
}
