//! End-to-end checks of the installed binary: schema errors and their
//! exit codes, synthetic-data generation at the published scale, and
//! byte-level determinism of bundles across repeat runs and thread counts.

use std::path::Path;
use std::process::{Command, Output};

fn sevml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sevml"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Generate a small synthetic CSV into `dir` and return its path.
fn synth_small(dir: &Path) -> String {
    let out = sevml(&[
        "synth",
        "--n",
        "400",
        "--seed",
        "3",
        "--out",
        dir.to_str().expect("utf8 path"),
    ]);
    assert_ok(&out);
    dir.join("synthetic.csv").to_str().expect("utf8 path").to_string()
}

#[test]
fn validate_names_the_missing_column_and_exits_2() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("short.csv");
    std::fs::write(
        &path,
        "Sex,AgeText,AlcoholDrugTest,DUI,DistractedDriving,TeenageDriver,Holiday,RightTurn,\
         Intersection,LeftTurn,WorkZone,RoadType,FunctionClass,RoadwaySurf,Weather,\
         VerticalAlignment,Severity\n",
    )
    .expect("write csv");
    let out = sevml(&["validate", "--data", path.to_str().expect("utf8 path")]);
    assert_eq!(out.status.code(), Some(2), "schema errors must exit 2");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("missing column 'Light'"),
        "stderr should name the missing column, got: {stderr}"
    );
}

#[test]
fn unknown_model_kind_exits_3() {
    let dir = tempfile::tempdir().expect("tempdir");
    let data = synth_small(dir.path());
    let out_dir = dir.path().join("run");
    let out = sevml(&[
        "compare",
        "--data",
        &data,
        "--models",
        "dtree,nosuch",
        "--out",
        out_dir.to_str().expect("utf8 path"),
    ]);
    assert_eq!(out.status.code(), Some(3), "config errors must exit 3");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("unknown model kind 'nosuch'"),
        "stderr should name the bad kind, got: {stderr}"
    );
}

#[test]
fn synth_reproduces_published_class_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = sevml(&[
        "synth",
        "--n",
        "8319",
        "--seed",
        "7",
        "--out",
        dir.path().to_str().expect("utf8 path"),
    ]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("minor=6480 serious=1363 fatal=476"),
        "unexpected counts line: {stdout}"
    );

    // Recount from the file itself; the severity text is the last column
    // and no field contains a comma.
    let csv = std::fs::read_to_string(dir.path().join("synthetic.csv")).expect("read csv");
    let mut counts = [0usize; 3];
    for line in csv.lines().skip(1) {
        match line.rsplit(',').next().expect("severity field") {
            "Minor injury" => counts[0] += 1,
            "Serious injury" => counts[1] += 1,
            "Fatal" => counts[2] += 1,
            other => panic!("unexpected severity value '{other}'"),
        }
    }
    assert_eq!(counts, [6480, 1363, 476]);
}

#[test]
fn compare_bundles_are_identical_across_repeat_runs() {
    let dir = tempfile::tempdir().expect("tempdir");
    let data = synth_small(dir.path());
    let mut boards = Vec::new();
    for name in ["a", "b"] {
        let out_dir = dir.path().join(name);
        let out = sevml(&[
            "compare",
            "--data",
            &data,
            "--seed",
            "5",
            "--folds",
            "3",
            "--models",
            "dtree,gnb,dummy",
            "--out",
            out_dir.to_str().expect("utf8 path"),
        ]);
        assert_ok(&out);
        boards.push(std::fs::read(out_dir.join("leaderboard.json")).expect("leaderboard"));
    }
    assert_eq!(boards[0], boards[1], "same seed must reproduce the leaderboard bytes");
}

#[test]
fn report_bundles_are_identical_across_thread_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    let data = synth_small(dir.path());
    let mut manifests = Vec::new();
    for (name, threads) in [("one", "1"), ("eight", "8")] {
        let out_dir = dir.path().join(name);
        let out = sevml(&[
            "report",
            "--data",
            &data,
            "--seed",
            "5",
            "--folds",
            "3",
            "--models",
            "dtree,gnb,dummy",
            "--instance",
            "5",
            "--instance",
            "17",
            "--permutations",
            "50",
            "--background",
            "20",
            "--threads",
            threads,
            "--out",
            out_dir.to_str().expect("utf8 path"),
        ]);
        assert_ok(&out);
        let manifest = out_dir.join("manifest.json");
        assert!(manifest.exists(), "report must finish the bundle");
        manifests.push(std::fs::read(manifest).expect("manifest"));
    }
    assert_eq!(
        manifests[0], manifests[1],
        "manifest (and therefore every hashed artifact) must not depend on threads"
    );
}
