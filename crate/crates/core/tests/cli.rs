use std::path::Path;
use std::process::{Command, Output};

use puzzlegen::io::write_dataset;
use puzzlegen::synthetic::{textured_room_frame, two_room_trajectory};

fn puzzlegen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_puzzlegen"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn overlap_matrix_of_one_frame_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut f = two_room_trajectory().swap_remove(0);
    f.id = "only".into();
    let manifest = write_dataset(&[f], dir.path()).unwrap();
    let out = puzzlegen(&["overlap-matrix", s(&manifest)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let csv = text(&out.stdout);
    let v: f64 = csv.trim().parse().expect("a single number");
    assert!(v >= 0.999, "{csv}");
}

#[test]
fn select_keyframes_prints_default_thresholds() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("o.csv");
    std::fs::write(&csv, "1.0,0.5,0.05\n0.5,1.0,0.05\n0.05,0.05,1.0\n").unwrap();
    let out = puzzlegen(&["select-keyframes", s(&csv)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    let header = stdout.lines().next().unwrap();
    assert!(
        header.contains("η=0.1") && header.contains("τ=0.2") && header.contains("ρ=0.7"),
        "{header}"
    );
    let json: serde_json::Value =
        serde_json::from_str(&stdout[stdout.find('{').unwrap()..]).unwrap();
    assert_eq!(json["keyframes"], serde_json::json!([0, 1]));

    let out = puzzlegen(&["select-keyframes", s(&csv), "--rho", "0.4"]);
    assert!(text(&out.stdout).contains("ρ=0.4"));
}

#[test]
fn generated_bundle_validates_and_previews() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&[textured_room_frame()], &dir.path().join("in")).unwrap();
    let bundle = dir.path().join("bundle");
    let out = puzzlegen(&[
        "--seed",
        "5",
        "image-to-clips",
        s(&manifest),
        "--out",
        s(&bundle),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(bundle.join("manifest.json").exists());

    let out = puzzlegen(&["validate", s(&bundle)]);
    assert!(
        out.status.success(),
        "{}{}",
        text(&out.stdout),
        text(&out.stderr)
    );
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);

    let previews = dir.path().join("preview");
    let out = puzzlegen(&["preview", s(&bundle), "--out", s(&previews)]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(previews.join("frame_000_panel.png").exists());
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(puzzlegen(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        puzzlegen(&["validate", "--bogus", "x"]).status.code(),
        Some(2)
    );
}

#[test]
fn failures_are_structured() {
    let out = puzzlegen(&["validate", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"]["kind"].is_string(), "{err}");
    assert!(err["error"]["message"]
        .as_str()
        .unwrap()
        .contains("/definitely/not/here"));

    let out = puzzlegen(&["--set", "patch.count=0", "overlap-matrix", "x.json"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "config");
}
