//! End-to-end tests against the built binary: synth -> track -> eval flow,
//! determinism, bench output shape, exit codes, and flag handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn lanetrack(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lanetrack"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("scenario.toml");
    fs::write(
        &path,
        r#"
frames = 10
width = 800
height = 288
noise = 0.05
dropout = 0.05
seed = 21

[[lane]]
channel = 0
m = 0.05
b = 300.0
sigma = 3.0
peak = 0.8
disappear = 10

[[lane]]
channel = 1
m = -0.05
b = 500.0
sigma = 3.0
peak = 0.8
disappear = 10
"#,
    )
    .unwrap();
    path
}

fn dir_contents(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn synth_track_eval_round_trip() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let synth_dir = tmp.path().join("synth");
    let pred_dir = tmp.path().join("pred");

    let out = lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "synth failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(synth_dir.join("000000.lpm").exists());
    assert!(synth_dir.join("000009.lines.txt").exists());

    let out = lanetrack(&[
        "track",
        "--input",
        synth_dir.to_str().unwrap(),
        "--output",
        pred_dir.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "track failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(pred_dir.join("000000.lines.txt").exists());

    let report_path = tmp.path().join("report.csv");
    let out = lanetrack(&[
        "eval",
        "--gt",
        synth_dir.to_str().unwrap(),
        "--pred",
        pred_dir.to_str().unwrap(),
        "--thresholds",
        "0.3,0.5",
        "--output",
        report_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "eval failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = fs::read_to_string(&report_path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "threshold,n_tp,n_gt,accuracy");
    assert_eq!(lines.len(), 3);
    // two clean lanes over 10 frames should score well at 0.3
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[2], "20");
    let acc: f64 = fields[3].parse().unwrap();
    assert!(acc >= 0.9, "accuracy at 0.3 was {acc}");
}

#[test]
fn track_output_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let synth_dir = tmp.path().join("synth");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_dir.to_str().unwrap(),
    ]);

    let pred_a = tmp.path().join("a");
    let pred_b = tmp.path().join("b");
    for dir in [&pred_a, &pred_b] {
        let out = lanetrack(&[
            "track",
            "--input",
            synth_dir.to_str().unwrap(),
            "--output",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(dir_contents(&pred_a), dir_contents(&pred_b));

    // synth itself is also byte-stable across runs
    let synth_b = tmp.path().join("synth_b");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_b.to_str().unwrap(),
    ]);
    assert_eq!(dir_contents(&synth_dir), dir_contents(&synth_b));
}

#[test]
fn checkpoint_resume_matches_full_run() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let synth_dir = tmp.path().join("synth");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_dir.to_str().unwrap(),
    ]);

    let full_dir = tmp.path().join("full");
    let out = lanetrack(&[
        "track",
        "--input",
        synth_dir.to_str().unwrap(),
        "--output",
        full_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // split the stream at frame 5
    let head_in = tmp.path().join("head_in");
    let tail_in = tmp.path().join("tail_in");
    fs::create_dir_all(&head_in).unwrap();
    fs::create_dir_all(&tail_in).unwrap();
    for i in 0..10u32 {
        let name = format!("{i:06}.lpm");
        let dest = if i < 5 { &head_in } else { &tail_in };
        fs::copy(synth_dir.join(&name), dest.join(&name)).unwrap();
    }
    let state = tmp.path().join("state.json");
    let head_out = tmp.path().join("head_out");
    let tail_out = tmp.path().join("tail_out");
    let out = lanetrack(&[
        "track",
        "--input",
        head_in.to_str().unwrap(),
        "--output",
        head_out.to_str().unwrap(),
        "--state-out",
        state.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = lanetrack(&[
        "track",
        "--input",
        tail_in.to_str().unwrap(),
        "--output",
        tail_out.to_str().unwrap(),
        "--state-in",
        state.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "resume failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    for i in 5..10u32 {
        let name = format!("{i:06}.lines.txt");
        assert_eq!(
            fs::read(full_dir.join(&name)).unwrap(),
            fs::read(tail_out.join(&name)).unwrap(),
            "frame {i} diverged after resume"
        );
    }
}

#[test]
fn bench_reports_all_stages() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let synth_dir = tmp.path().join("synth");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_dir.to_str().unwrap(),
    ]);

    let out = lanetrack(&[
        "bench",
        "--input",
        synth_dir.to_str().unwrap(),
        "--reps",
        "2",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "stage,mean_ms,p95_ms,frames");
    let stages: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(stages, ["extraction", "variance", "fit", "track"]);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert!(fields[1].parse::<f64>().unwrap() >= 0.0);
        assert!(fields[2].parse::<f64>().unwrap() >= 0.0);
        assert_eq!(fields[3], "10");
    }
}

#[test]
fn tracker_flags_change_behavior_without_breaking() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let synth_dir = tmp.path().join("synth");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_dir.to_str().unwrap(),
    ]);

    let pred = tmp.path().join("pred");
    let out = lanetrack(&[
        "track",
        "--input",
        synth_dir.to_str().unwrap(),
        "--output",
        pred.to_str().unwrap(),
        "--no-merge",
        "--alpha",
        "0.3",
        "--match-k",
        "1.5",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(pred.join("000009.lines.txt").exists());

    // invalid alpha is rejected as a data/config error
    let out = lanetrack(&[
        "track",
        "--input",
        synth_dir.to_str().unwrap(),
        "--output",
        pred.to_str().unwrap(),
        "--alpha",
        "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_override_changes_noise() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        a.to_str().unwrap(),
    ]);
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        b.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert_ne!(
        fs::read(a.join("000000.lpm")).unwrap(),
        fs::read(b.join("000000.lpm")).unwrap()
    );
}

#[test]
fn exit_codes() {
    // usage error: unknown subcommand
    let out = lanetrack(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    // usage error: unknown flag
    let out = lanetrack(&["track", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    // help and version succeed
    assert_eq!(lanetrack(&["--help"]).status.code(), Some(0));
    assert_eq!(lanetrack(&["--version"]).status.code(), Some(0));
    // data error: missing input directory
    let out = lanetrack(&["track", "--input", "/nonexistent", "--output", "/tmp/x"]);
    assert_eq!(out.status.code(), Some(2));
    // data error: malformed map file
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("000000.lpm"), b"not a map").unwrap();
    let pred = tmp.path().join("pred");
    let out = lanetrack(&[
        "track",
        "--input",
        tmp.path().to_str().unwrap(),
        "--output",
        pred.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn eval_handles_empty_prediction_dir() {
    let tmp = TempDir::new().unwrap();
    let scenario = write_scenario(tmp.path());
    let synth_dir = tmp.path().join("synth");
    lanetrack(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--output",
        synth_dir.to_str().unwrap(),
    ]);
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = lanetrack(&[
        "eval",
        "--gt",
        synth_dir.to_str().unwrap(),
        "--pred",
        empty.to_str().unwrap(),
        "--thresholds",
        "0.5",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(fields[1], "0");
    assert_eq!(fields[2], "20");
}
