use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn defakehop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_defakehop"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small synthetic corpus plus a config that trains quickly.
fn setup(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let data = dir.join("data");
    let out = defakehop(&["synth", "--out", path_str(&data), "--videos", "16", "--frames", "4", "--test-fraction", "0.25"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let config = dir.join("run.toml");
    std::fs::write(&config, "max_trees = 30\nmin_data_in_leaf = 5\nseed = 3\n").unwrap();
    (data.join("train.tsv"), data.join("test.tsv"), config)
}

#[test]
fn train_evaluate_audit_flow() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, config) = setup(dir.path());
    let model = dir.path().join("model.bin");
    let train_report = dir.path().join("train_audit.tsv");

    let out = defakehop(&[
        "train", "--manifest", path_str(&train), "--config", path_str(&config), "--model", path_str(&model),
        "--out", path_str(&train_report),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("total"));

    let again = dir.path().join("again.bin");
    let out = defakehop(&[
        "train", "--manifest", path_str(&train), "--config", path_str(&config), "--model", path_str(&again),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());

    let audit_report = dir.path().join("audit.tsv");
    let out = defakehop(&["audit", "--model", path_str(&model), "--out", path_str(&audit_report)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let audit = std::fs::read_to_string(&audit_report).unwrap();
    assert_eq!(audit, std::fs::read_to_string(&train_report).unwrap());
    assert_eq!(audit.lines().count(), 9);
    let total: usize = audit.lines().last().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!(total <= 256_000);

    let eval_dir = dir.path().join("eval");
    let out = defakehop(&["evaluate", "--model", path_str(&model), "--manifest", path_str(&test), "--out", path_str(&eval_dir)]);
    assert!(out.status.success(), "{}", stderr(&out));
    let summary = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(summary.contains("frame_auc") && summary.contains("video_auc"), "{summary}");
    assert_eq!(std::fs::read_to_string(eval_dir.join("summary.tsv")).unwrap(), summary);
    for f in ["frames.tsv", "videos.tsv"] {
        assert!(eval_dir.join(f).is_file());
    }
    let rerun = defakehop(&["evaluate", "--model", path_str(&model), "--manifest", path_str(&test)]);
    assert_eq!(String::from_utf8_lossy(&rerun.stdout), summary);

    // one video: both AUCs need two classes
    let text = std::fs::read_to_string(&test).unwrap();
    let mut lines = text.lines();
    let mut single: Vec<&str> = lines.by_ref().take(2).collect();
    let first = lines.next().unwrap();
    let video = first.split('\t').nth(2).unwrap();
    single.push(first);
    single.extend(lines.filter(|l| l.split('\t').nth(2) == Some(video)));
    let one_video = test.with_file_name("one_video.tsv");
    std::fs::write(&one_video, single.join("\n") + "\n").unwrap();
    let out = defakehop(&["evaluate", "--model", path_str(&model), "--manifest", path_str(&one_video)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("undefined"));

    let costs = dir.path().join("costs");
    let out = defakehop(&["costs", "--model", path_str(&model), "--out", path_str(&costs)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read_dir(&costs).unwrap().count(), 11);

    let bytes = std::fs::read(&model).unwrap();
    let truncated = dir.path().join("truncated.bin");
    std::fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    let out = defakehop(&["audit", "--model", path_str(&truncated)]);
    assert_eq!(out.status.code(), Some(6), "{}", stderr(&out));
    let out = defakehop(&["evaluate", "--model", path_str(&truncated), "--manifest", path_str(&test)]);
    assert_eq!(out.status.code(), Some(6));
}

#[test]
fn missing_manifest_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.bin");
    let missing = dir.path().join("nope.tsv");
    let out = defakehop(&["train", "--manifest", path_str(&missing), "--model", path_str(&model)]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).contains("manifest not found"), "{}", stderr(&out));
    assert!(!model.exists());
}

#[test]
fn zero_keep_fraction_fails_before_training() {
    let dir = tempfile::tempdir().unwrap();
    let (train, _, _) = setup(dir.path());
    let config = dir.path().join("bad.toml");
    std::fs::write(&config, "landmark_keep_fraction = 0\n").unwrap();
    let model = dir.path().join("m.bin");
    let out = defakehop(&[
        "train", "--manifest", path_str(&train), "--config", path_str(&config), "--model", path_str(&model),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
    assert!(stderr(&out).contains("keep_fraction"), "{}", stderr(&out));
    assert!(!model.exists());

    std::fs::write(&config, "unknown_key = 1\n").unwrap();
    let out = defakehop(&["train", "--manifest", path_str(&train), "--config", path_str(&config), "--model", path_str(&model)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn reference_audit_without_model() {
    let out = defakehop(&["audit"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for row in ["pixelhop-landmarks", "spatialpca-regions", "dft-regions", "classifier", "total"] {
        assert!(text.contains(row), "{text}");
    }
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(defakehop(&["train"]).status.code(), Some(2));
    assert_eq!(defakehop(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn landmark_table_has_a_row_per_landmark() {
    let dir = tempfile::tempdir().unwrap();
    let (train, test, config) = setup(dir.path());
    let table = dir.path().join("landmarks.tsv");
    let out = defakehop(&[
        "analyze-landmarks", "--manifest", path_str(&train), "--test-manifest", path_str(&test), "--config",
        path_str(&config), "--out", path_str(&table),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 69);
    for line in text.lines().skip(1) {
        let auc: f64 = line.split('\t').nth(2).unwrap().parse().unwrap();
        assert!((0.0..=1.0).contains(&auc));
    }
}
