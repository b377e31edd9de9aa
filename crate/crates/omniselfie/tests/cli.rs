//! End-to-end tests of the `omniselfie` binary: exit codes, stage
//! composition, and the adapter protocol served by `stub-adapter`.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn exe() -> &'static str {
    env!("CARGO_BIN_EXE_omniselfie")
}

fn run(args: &[&str]) -> Output {
    Command::new(exe()).args(args).output().expect("binary runs")
}

fn run_in(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(exe());
    for a in args {
        cmd.arg(a.as_ref());
    }
    cmd.output().expect("binary runs")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// Simulates a small scene into `dir` and returns its frames directory and
/// sidecar paths.
fn simulate(dir: &Path, extra: &[&str]) -> (PathBuf, PathBuf, PathBuf) {
    let mut args: Vec<&dyn AsRef<std::ffi::OsStr>> = vec![
        &"simulate", &"--n-frames", &"6", &"--peak", &"2", &"--seed", &"9", &"--out", &dir,
    ];
    for a in extra {
        args.push(a);
    }
    let out = run_in(&args);
    assert!(out.status.success(), "simulate failed: {}", stderr(&out));
    (dir.join("frames"), dir.join("detections.json"), dir.join("expressions.json"))
}

#[test]
fn version_is_machine_readable() {
    let out = run(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut words = text.split_whitespace();
    assert_eq!(words.next(), Some("omniselfie"));
    let version = words.next().expect("version word");
    assert!(
        version.split('.').count() == 3 && version.split('.').all(|p| p.parse::<u64>().is_ok()),
        "version {version:?} is not semver-shaped"
    );
}

#[test]
fn unknown_flags_are_rejected() {
    let out = run(&["run", "--frames", "/tmp", "--out", "/tmp", "--does-not-exist"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--does-not-exist"));
}

#[test]
fn missing_frames_dir_exits_2() {
    let dir = TempDir::new().unwrap();
    let (_, dets, exprs) = simulate(dir.path(), &[]);
    let out = run_in(&[
        &"run",
        &"--frames",
        &dir.path().join("no-such-dir"),
        &"--detections",
        &dets,
        &"--expressions",
        &exprs,
        &"--out",
        &dir.path().join("out"),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(stderr(&out).starts_with("error: "), "diagnostic line: {}", stderr(&out));
}

#[test]
fn empty_detections_exit_3() {
    let dir = TempDir::new().unwrap();
    let (frames, _, exprs) = simulate(dir.path(), &[]);
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "{\"frames\": []}\n").unwrap();
    let out = run_in(&[
        &"run",
        &"--frames",
        &frames,
        &"--detections",
        &empty,
        &"--expressions",
        &exprs,
        &"--out",
        &dir.path().join("out"),
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr(&out));
}

#[test]
fn unframeable_group_exits_4() {
    let dir = TempDir::new().unwrap();
    let scene = dir.path().join("scene");
    let out = run_in(&[
        &"simulate", &"--n-frames", &"1", &"--peak", &"0", &"--seed", &"3", &"--out", &scene,
    ]);
    assert!(out.status.success());
    // Two faces on exactly opposite sides of the panorama: no tangent plane
    // can contain both, whatever the view direction.
    let dets = dir.path().join("antipodal_detections.json");
    std::fs::write(
        &dets,
        r#"{"frames": [{"index": 0, "detections": [
            {"x": 100.0, "y": 430.0, "w": 100.0, "h": 100.0, "confidence": 1.0},
            {"x": 1060.0, "y": 430.0, "w": 100.0, "h": 100.0, "confidence": 1.0}
        ]}]}"#,
    )
    .unwrap();
    let exprs = dir.path().join("antipodal_expressions.json");
    std::fs::write(
        &exprs,
        r#"{"frames": [{"index": 0, "faces": [
            {"x": 150.0, "y": 480.0, "scores": {"angry": 0.0, "disgust": 0.0, "fear": 0.0,
             "happy": 1.0, "sad": 0.0, "surprise": 0.0, "neutral": 0.0}},
            {"x": 1110.0, "y": 480.0, "scores": {"angry": 0.0, "disgust": 0.0, "fear": 0.0,
             "happy": 1.0, "sad": 0.0, "surprise": 0.0, "neutral": 0.0}}
        ]}]}"#,
    )
    .unwrap();
    let out = run_in(&[
        &"run",
        &"--frames",
        &scene.join("frames"),
        &"--detections",
        &dets,
        &"--expressions",
        &exprs,
        &"--out",
        &dir.path().join("out"),
    ]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr(&out));
}

#[test]
fn adapter_env_timeout_must_be_valid() {
    let dir = TempDir::new().unwrap();
    let (frames, _, _) = simulate(dir.path(), &[]);
    let out = Command::new(exe())
        .args(["run", "--frames"])
        .arg(&frames)
        .args(["--adapter", "true", "--out"])
        .arg(dir.path().join("out"))
        .env("OMNISELFIE_ADAPTER_TIMEOUT_SECS", "soon")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("OMNISELFIE_ADAPTER_TIMEOUT_SECS"),
        "diagnostic names the variable: {}",
        stderr(&out)
    );
}

#[test]
fn staged_commands_compose_byte_identically_to_run() {
    let dir = TempDir::new().unwrap();
    let scene = dir.path().join("scene");
    let (frames, _, _) = simulate(&scene, &[]);
    let adapter = format!("{} stub-adapter", exe());
    let knobs = ["--bandwidth", "50", "--out-width", "320"];

    // One-shot run via the live adapter.
    let run_dir = dir.path().join("run");
    let out = Command::new(exe())
        .args(["run", "--frames"])
        .arg(&frames)
        .args(["--adapter", &adapter])
        .args(knobs)
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "run: {}", stderr(&out));

    // The same pipeline as four separate processes.
    let stage_dir = dir.path().join("stages");
    let out = Command::new(exe())
        .args(["detect", "--frames"])
        .arg(&frames)
        .args(["--adapter", &adapter])
        .arg("--out")
        .arg(&stage_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "detect: {}", stderr(&out));
    let out = Command::new(exe())
        .args(["score", "--frames"])
        .arg(&frames)
        .arg("--detections")
        .arg(stage_dir.join("detections.json"))
        .arg("--expressions")
        .arg(stage_dir.join("expressions.json"))
        .args(knobs)
        .arg("--out")
        .arg(&stage_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "score: {}", stderr(&out));
    let out = Command::new(exe())
        .arg("select")
        .arg("--scores")
        .arg(stage_dir.join("scores.json"))
        .arg("--out")
        .arg(&stage_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "select: {}", stderr(&out));
    let out = Command::new(exe())
        .args(["render", "--frames"])
        .arg(&frames)
        .arg("--selection")
        .arg(stage_dir.join("selection.json"))
        .arg("--out")
        .arg(&stage_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "render: {}", stderr(&out));

    let direct = std::fs::read(run_dir.join("selfie.png")).unwrap();
    let composed = std::fs::read(stage_dir.join("selfie.png")).unwrap();
    assert_eq!(direct, composed, "stage composition must be byte-identical to run");
}

#[test]
fn adapter_run_selects_scripted_peak() {
    let dir = TempDir::new().unwrap();
    let scene = dir.path().join("scene");
    let (frames, _, _) = simulate(&scene, &[]);
    let run_dir = dir.path().join("out");
    let out = Command::new(exe())
        .args(["run", "--frames"])
        .arg(&frames)
        .args(["--adapter", &format!("{} stub-adapter", exe())])
        .args(["--bandwidth", "50", "--out-width", "320"])
        .arg("--out")
        .arg(&run_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "run: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["selected_frame"], 2, "scene peaks at frame 2");
    assert_eq!(report["classes"].as_array().unwrap().len(), 3);
    // The PNG is a real image of the configured width.
    let img = image::open(run_dir.join("selfie.png")).unwrap();
    assert_eq!(img.width(), 320);
}

#[test]
fn noisy_simulation_still_selects_peak() {
    let dir = TempDir::new().unwrap();
    let (frames, dets, exprs) =
        simulate(dir.path(), &[&"--miss-prob", &"0.2", &"--jitter", &"2.0"]);
    let run_dir = dir.path().join("out");
    let out = run_in(&[
        &"run",
        &"--frames",
        &frames,
        &"--detections",
        &dets,
        &"--expressions",
        &exprs,
        &"--bandwidth",
        &"50",
        &"--out-width",
        &"320",
        &"--out",
        &run_dir,
    ]);
    assert!(out.status.success(), "run: {}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["selected_frame"], 2);
}

#[test]
fn compare_baseline_writes_its_artifacts() {
    let dir = TempDir::new().unwrap();
    let scene = dir.path().join("scene");
    let out = run_in(&[
        &"simulate", &"--n-frames", &"6", &"--peak", &"2", &"--seed", &"9",
        &"--distant-distractor", &"--out", &scene,
    ]);
    assert!(out.status.success());
    let run_dir = dir.path().join("out");
    let out = run_in(&[
        &"compare-baseline",
        &"--frames",
        &scene.join("frames"),
        &"--detections",
        &scene.join("detections.json"),
        &"--expressions",
        &scene.join("expressions.json"),
        &"--bandwidth",
        &"50",
        &"--out-width",
        &"320",
        &"--out",
        &run_dir,
    ]);
    assert!(out.status.success(), "compare-baseline: {}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(
        &std::fs::read(run_dir.join("report_baseline.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(report["selected_frame"], 2);
    assert_eq!(report["mode_count"], 4, "three faces plus the persistent bystander");
    assert!(run_dir.join("selfie_baseline.png").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let (frames, dets, exprs) = simulate(dir.path(), &[]);
    let config = dir.path().join("config.json");
    // Bandwidth 50 suits the simulated scene; out_width intentionally odd.
    std::fs::write(&config, "{\"bandwidth\": 50.0, \"out_width\": 200}\n").unwrap();
    let run_dir = dir.path().join("out");
    let out = run_in(&[
        &"run",
        &"--frames",
        &frames,
        &"--detections",
        &dets,
        &"--expressions",
        &exprs,
        &"--config",
        &config,
        &"--out-width",
        &"240",
        &"--out",
        &run_dir,
    ]);
    assert!(out.status.success(), "run: {}", stderr(&out));
    let img = image::open(run_dir.join("selfie.png")).unwrap();
    assert_eq!(img.width(), 240, "flag overrides the config file");

    // Unknown config keys are rejected.
    std::fs::write(&config, "{\"bandwith\": 50.0}\n").unwrap();
    let out = run_in(&[
        &"run",
        &"--frames",
        &frames,
        &"--detections",
        &dets,
        &"--expressions",
        &exprs,
        &"--config",
        &config,
        &"--out",
        &run_dir,
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}
